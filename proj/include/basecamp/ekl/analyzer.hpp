#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "basecamp/diagnostic.hpp"
#include "basecamp/ekl/ast.hpp"
#include "basecamp/numerics.hpp"

namespace basecamp::ekl {

enum class Role { input, intermediate, output, index_domain };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::input: return "input";
    case Role::intermediate: return "intermediate";
    case Role::output: return "output";
    case Role::index_domain: return "index";
  }
  return "?";
}

/// Tensor or index-domain entry. An index domain has shape {extent}.
struct Symbol {
  std::string name;
  Role role = Role::input;
  std::vector<std::int64_t> shape;
  NumericFormat format;
  bool parallel = false;  // index domains only
  SourceSpan span;
};

/// A statement whose subscripts are resolved: plain indices and offsets are
/// `index_ref` nodes, everything else in subscript position is a gather.
struct TypedStatement {
  std::string target;
  std::vector<std::string> free_indices;
  std::vector<std::string> reduce_indices;  // in index declaration order
  Expr value;
  bool construct = false;  // value is [e1, ..., en] selected by the last free index
  SourceSpan span;
};

struct TypedProgram {
  std::vector<Symbol> symbols;  // declaration order
  std::vector<TypedStatement> statements;

  const Symbol* find(std::string_view name) const {
    for (const auto& s : symbols)
      if (s.name == name) return &s;
    return nullptr;
  }
  std::int64_t extent(std::string_view index) const {
    const Symbol* s = find(index);
    return s && s->role == Role::index_domain ? s->shape.front() : 0;
  }
  std::vector<std::string> index_names() const {
    std::vector<std::string> out;
    for (const auto& s : symbols)
      if (s.role == Role::index_domain) out.push_back(s.name);
    return out;
  }
};

namespace detail {

class Analyzer {
 public:
  explicit Analyzer(NumericFormat default_format) : default_(default_format) {}

  TypedProgram run(const KernelSource& k) {
    for (const auto& item : k.items) {
      std::visit([this](const auto& d) { visit(d); }, item);
    }
    assign_output_roles();
    if (!diags_.empty()) throw CompileError(diags_);
    return std::move(prog_);
  }

 private:
  void error(std::string message, SourceSpan span) {
    diags_.push_back(Diagnostic{std::move(message), span, {}, {}, {}});
  }

  bool declared(const std::string& name) const {
    return consts_.count(name) || prog_.find(name) != nullptr;
  }

  bool check_fresh(const Identifier& id) {
    if (declared(id.text)) {
      error("redefinition of '" + id.text + "'", id.span);
      return false;
    }
    return true;
  }

  std::optional<std::int64_t> resolve_extent(const Extent& x) {
    std::int64_t v = x.value;
    if (!x.name.empty()) {
      if (auto it = consts_.find(x.name); it != consts_.end()) {
        v = it->second;
      } else if (const Symbol* s = prog_.find(x.name); s && s->role == Role::index_domain) {
        v = s->shape.front();
      } else {
        error("undeclared extent '" + x.name + "'", x.span);
        return std::nullopt;
      }
    }
    if (v < 1) {
      error("extent must be positive", x.span);
      return std::nullopt;
    }
    return v;
  }

  void visit(const ConstDecl& d) {
    if (check_fresh(d.name)) consts_[d.name.text] = d.value;
  }

  void visit(const IndexDecl& d) {
    if (!check_fresh(d.name)) return;
    auto v = resolve_extent(d.extent);
    if (!v) return;
    prog_.symbols.push_back(Symbol{d.name.text, Role::index_domain, {*v}, NumericFormat::integer(), false, d.span});
  }

  void visit(const TensorDecl& d) {
    if (!check_fresh(d.name)) return;
    Symbol s{d.name.text, Role::input, {}, d.element.value_or(default_), false, d.span};
    for (const auto& x : d.dims) {
      auto v = resolve_extent(x);
      if (!v) return;
      s.shape.push_back(*v);
    }
    prog_.symbols.push_back(std::move(s));
  }

  void visit(const ParallelDecl& d) {
    for (const auto& id : d.indices) {
      Symbol* s = find_mut(id.text);
      if (!s || s->role != Role::index_domain) {
        error("'" + id.text + "' is not a declared index", id.span);
        continue;
      }
      s->parallel = true;
    }
  }

  Symbol* find_mut(const std::string& name) {
    for (auto& s : prog_.symbols)
      if (s.name == name) return &s;
    return nullptr;
  }

  bool is_index(const std::string& name) const {
    const Symbol* s = prog_.find(name);
    return s && s->role == Role::index_domain;
  }

  // Resolves one subscript of `tensor` at dimension `dim`; returns false on error.
  bool resolve_subscript(Expr& e, const Symbol& tensor, std::size_t dim, std::set<std::string>& used) {
    std::int64_t dim_extent = tensor.shape[dim];
    auto check_index = [&](const std::string& name, std::int64_t offset, const SourceSpan& span) {
      std::int64_t ext = prog_.extent(name);
      used.insert(name);
      if (offset == 0 && ext != dim_extent) {
        error("index '" + name + "' has extent " + std::to_string(ext) + " but dimension " +
                  std::to_string(dim) + " of '" + tensor.name + "' has extent " + std::to_string(dim_extent),
              span);
        return false;
      }
      if (offset < 0 || offset + ext > dim_extent) {
        error("subscript '" + name + (offset < 0 ? "" : "+") + std::to_string(offset) +
                  "' runs outside dimension " + std::to_string(dim) + " of '" + tensor.name + "' (extent " +
                  std::to_string(dim_extent) + ")",
              span);
        return false;
      }
      return true;
    };

    if (e.kind == Expr::Kind::access && e.subscripts.empty() && is_index(e.name)) {
      std::string name = e.name;
      SourceSpan span = e.span;
      e = Expr{};
      e.kind = Expr::Kind::index_ref;
      e.name = name;
      e.span = span;
      return check_index(name, 0, span);
    }
    if (e.kind == Expr::Kind::binary && e.op != BinaryOp::mul) {
      const Expr& a = e.operands[0];
      const Expr& b = e.operands[1];
      if (a.kind == Expr::Kind::access && a.subscripts.empty() && is_index(a.name) &&
          b.kind == Expr::Kind::number && b.integer_literal) {
        std::int64_t off = static_cast<std::int64_t>(b.number);
        if (e.op == BinaryOp::sub) off = -off;
        std::string name = a.name;
        SourceSpan span = e.span;
        e = Expr{};
        e.kind = Expr::Kind::index_ref;
        e.name = name;
        e.offset = off;
        e.span = span;
        return check_index(name, off, span);
      }
    }
    if (e.kind == Expr::Kind::access) {
      const Symbol* s = prog_.find(e.name);
      if (!s) {
        error("undeclared identifier '" + e.name + "'", e.span);
        return false;
      }
      if (s->role == Role::index_domain) {
        error("index '" + e.name + "' cannot be subscripted", e.span);
        return false;
      }
      if (!is_integer_format(s->format)) {
        error("tensor '" + e.name + "' used as a subscript must have integer elements, found " +
                  to_string(s->format),
              e.span);
        return false;
      }
      return resolve_value(e, used);
    }
    error("unsupported subscript: use an index, an index plus or minus a constant, or an integer tensor access",
          e.span);
    return false;
  }

  // Resolves an expression in value position; returns false on error.
  bool resolve_value(Expr& e, std::set<std::string>& used) {
    switch (e.kind) {
      case Expr::Kind::number:
      case Expr::Kind::index_ref:
        return true;
      case Expr::Kind::access: {
        const Symbol* s = prog_.find(e.name);
        if (!s) {
          if (consts_.count(e.name)) {
            error("constant '" + e.name + "' is an extent, not a value", e.span);
          } else {
            error("undeclared identifier '" + e.name + "'", e.span);
          }
          return false;
        }
        if (s->role == Role::index_domain) {
          error("index '" + e.name + "' used as a value", e.span);
          return false;
        }
        if (e.subscripts.size() != s->shape.size()) {
          error("'" + e.name + "' has rank " + std::to_string(s->shape.size()) + " but is accessed with " +
                    std::to_string(e.subscripts.size()) + " subscript(s)",
                e.span);
          return false;
        }
        Symbol copy = *s;
        bool ok = true;
        for (std::size_t d = 0; d < e.subscripts.size(); ++d)
          ok = resolve_subscript(e.subscripts[d], copy, d, used) && ok;
        return ok;
      }
      case Expr::Kind::construct:
        error("in-place construction is only allowed as the whole right-hand side", e.span);
        return false;
      default: {
        bool ok = true;
        for (auto& o : e.operands) ok = resolve_value(o, used) && ok;
        return ok;
      }
    }
  }

  bool integer_valued(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::number: return e.integer_literal;
      case Expr::Kind::index_ref: return true;
      case Expr::Kind::access: {
        const Symbol* s = prog_.find(e.name);
        return s && is_integer_format(s->format);
      }
      case Expr::Kind::select: return integer_valued(e.operands[2]) && integer_valued(e.operands[3]);
      default:
        return std::all_of(e.operands.begin(), e.operands.end(),
                           [this](const Expr& o) { return integer_valued(o); });
    }
  }

  void visit(const Statement& st) {
    if (!check_fresh(st.target)) return;
    TypedStatement ts;
    ts.target = st.target.text;
    ts.value = st.value;
    ts.span = st.span;
    ts.construct = st.value.kind == Expr::Kind::construct;

    std::set<std::string> used;
    bool ok = true;
    if (ts.construct) {
      for (auto& o : ts.value.operands) ok = resolve_value(o, used) && ok;
    } else {
      ok = resolve_value(ts.value, used);
    }
    if (!ok) return;

    std::vector<std::string> decl_order = prog_.index_names();
    if (st.indices) {
      std::set<std::string> seen;
      for (const auto& id : *st.indices) {
        if (!is_index(id.text)) {
          error("'" + id.text + "' is not a declared index", id.span);
          return;
        }
        if (!seen.insert(id.text).second) {
          error("index '" + id.text + "' repeated on the left-hand side", id.span);
          return;
        }
        ts.free_indices.push_back(id.text);
      }
    } else {
      if (ts.construct) {
        error("in-place construction needs an explicit index list naming its trailing index", st.target.span);
        return;
      }
      for (const auto& name : decl_order) {
        if (!used.count(name)) continue;
        if (!prog_.find(name)->parallel) {
          error("explicit index list required for '" + st.target.text + "': index '" + name +
                    "' is not declared parallel, so it is ambiguous whether it is free or reduced",
                st.target.span);
          return;
        }
        ts.free_indices.push_back(name);
      }
    }

    if (ts.construct) {
      if (ts.free_indices.empty()) {
        error("in-place construction needs a trailing index on the left-hand side", st.target.span);
        return;
      }
      const std::string& sel = ts.free_indices.back();
      auto n = static_cast<std::int64_t>(ts.value.operands.size());
      if (prog_.extent(sel) != n) {
        error("trailing index '" + sel + "' has extent " + std::to_string(prog_.extent(sel)) +
                  " but the construction has " + std::to_string(n) + " element(s)",
              st.value.span);
        return;
      }
      if (used.count(sel)) {
        error("trailing index '" + sel + "' of an in-place construction cannot appear inside it", st.value.span);
        return;
      }
    }

    for (const auto& name : decl_order) {
      if (used.count(name) &&
          std::find(ts.free_indices.begin(), ts.free_indices.end(), name) == ts.free_indices.end())
        ts.reduce_indices.push_back(name);
    }

    Symbol out;
    out.name = ts.target;
    out.role = Role::intermediate;
    for (const auto& f : ts.free_indices) out.shape.push_back(prog_.extent(f));
    bool integral = ts.construct ? std::all_of(ts.value.operands.begin(), ts.value.operands.end(),
                                               [this](const Expr& o) { return integer_valued(o); })
                                 : integer_valued(ts.value);
    out.format = integral ? NumericFormat::integer() : default_;
    out.span = st.target.span;
    prog_.symbols.push_back(std::move(out));
    prog_.statements.push_back(std::move(ts));
  }

  static void collect_names(const Expr& e, std::set<std::string>& names) {
    if (e.kind == Expr::Kind::access) names.insert(e.name);
    for (const auto& s : e.subscripts) collect_names(s, names);
    for (const auto& o : e.operands) collect_names(o, names);
  }

  void assign_output_roles() {
    std::set<std::string> consumed;
    for (const auto& st : prog_.statements) collect_names(st.value, consumed);
    for (auto& s : prog_.symbols) {
      if (s.role == Role::intermediate && !consumed.count(s.name)) s.role = Role::output;
    }
  }

  NumericFormat default_;
  std::map<std::string, std::int64_t> consts_;
  TypedProgram prog_;
  std::vector<Diagnostic> diags_;
};

}  // namespace detail

/// Resolves names, shapes, formats and the free/reduce split of every
/// statement. Indices named on the left-hand side are free; every other index
/// on the right-hand side is summed over.
inline TypedProgram analyze(const KernelSource& k, NumericFormat default_format = NumericFormat::ieee_double()) {
  return detail::Analyzer(default_format).run(k);
}

}  // namespace basecamp::ekl
