#pragma once

#include <charconv>
#include <string>
#include <variant>

#include "basecamp/ekl/ast.hpp"

namespace basecamp::ekl {

/// Shortest decimal text that reads back as `v`; reals always keep a '.' or
/// an exponent so they stay reals.
inline std::string format_number(double v, bool integer_literal) {
  char buf[64];
  if (integer_literal) {
    auto r = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
    return std::string(buf, r.ptr);
  }
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::binary: return e.op == BinaryOp::mul ? 2 : 1;
    case Expr::Kind::negate: return 3;
    default: return 4;
  }
}

inline void print_expr(std::string& out, const Expr& e);

inline void print_operand(std::string& out, const Expr& e, bool parens) {
  if (parens) out += '(';
  print_expr(out, e);
  if (parens) out += ')';
}

inline void print_list(std::string& out, const std::vector<Expr>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    print_expr(out, xs[i]);
  }
}

inline void print_expr(std::string& out, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number:
      out += format_number(e.number, e.integer_literal);
      return;
    case Expr::Kind::index_ref:
      out += e.name;
      if (e.offset > 0) out += "+" + std::to_string(e.offset);
      if (e.offset < 0) out += "-" + std::to_string(-e.offset);
      return;
    case Expr::Kind::access:
      out += e.name;
      if (!e.subscripts.empty()) {
        out += '[';
        print_list(out, e.subscripts);
        out += ']';
      }
      return;
    case Expr::Kind::binary: {
      int p = precedence(e);
      print_operand(out, e.operands[0], precedence(e.operands[0]) < p);
      out += ' ';
      out += spelling(e.op);
      out += ' ';
      print_operand(out, e.operands[1], precedence(e.operands[1]) <= p);
      return;
    }
    case Expr::Kind::negate:
      out += '-';
      print_operand(out, e.operands[0], precedence(e.operands[0]) <= 3);
      return;
    case Expr::Kind::select:
      out += "select(";
      print_expr(out, e.operands[0]);
      out += ' ';
      out += spelling(e.compare);
      out += ' ';
      print_expr(out, e.operands[1]);
      out += ", ";
      print_expr(out, e.operands[2]);
      out += ", ";
      print_expr(out, e.operands[3]);
      out += ')';
      return;
    case Expr::Kind::construct:
      out += '[';
      print_list(out, e.operands);
      out += ']';
      return;
  }
}

inline std::string extent_text(const Extent& x) {
  return x.name.empty() ? std::to_string(x.value) : x.name;
}

inline std::string element_text(const NumericFormat& f) {
  return f == NumericFormat::integer() ? std::string("int") : to_string(f);
}

}  // namespace detail

inline std::string to_source(const Expr& e) {
  std::string out;
  detail::print_expr(out, e);
  return out;
}

/// Canonical source text: one item per line, declarations end in ';'.
inline std::string pretty_print(const KernelSource& k) {
  std::string out;
  for (const auto& item : k.items) {
    std::visit(
        [&out](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, ConstDecl>) {
            out += "const " + d.name.text + " = " + std::to_string(d.value) + ";\n";
          } else if constexpr (std::is_same_v<T, IndexDecl>) {
            out += "index " + d.name.text + " : " + detail::extent_text(d.extent) + ";\n";
          } else if constexpr (std::is_same_v<T, TensorDecl>) {
            if (d.scalar) {
              out += "scalar " + d.name.text;
              if (d.element) out += " : " + detail::element_text(*d.element);
            } else {
              out += "tensor " + d.name.text + " : [";
              for (std::size_t i = 0; i < d.dims.size(); ++i) {
                if (i) out += ", ";
                out += detail::extent_text(d.dims[i]);
              }
              out += ']';
              if (d.element) out += " of " + detail::element_text(*d.element);
            }
            out += ";\n";
          } else if constexpr (std::is_same_v<T, ParallelDecl>) {
            out += "parallel ";
            for (std::size_t i = 0; i < d.indices.size(); ++i) {
              if (i) out += ", ";
              out += d.indices[i].text;
            }
            out += ";\n";
          } else {
            out += d.target.text;
            if (d.indices) {
              out += '[';
              for (std::size_t i = 0; i < d.indices->size(); ++i) {
                if (i) out += ", ";
                out += (*d.indices)[i].text;
              }
              out += ']';
            }
            out += " = ";
            detail::print_expr(out, d.value);
            out += '\n';
          }
        },
        item);
  }
  return out;
}

}  // namespace basecamp::ekl
