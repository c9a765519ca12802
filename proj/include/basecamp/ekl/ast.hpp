#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "basecamp/diagnostic.hpp"
#include "basecamp/numerics.hpp"

namespace basecamp::ekl {

enum class BinaryOp { add, sub, mul };
enum class CompareOp { le, lt, ge, gt, eq, ne };

inline const char* spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
  }
  return "?";
}

inline const char* spelling(CompareOp op) {
  switch (op) {
    case CompareOp::le: return "<=";
    case CompareOp::lt: return "<";
    case CompareOp::ge: return ">=";
    case CompareOp::gt: return ">";
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
  }
  return "?";
}

inline bool compare(CompareOp op, double a, double b) {
  switch (op) {
    case CompareOp::le: return a <= b;
    case CompareOp::lt: return a < b;
    case CompareOp::ge: return a >= b;
    case CompareOp::gt: return a > b;
    case CompareOp::eq: return a == b;
    case CompareOp::ne: return a != b;
  }
  return false;
}

struct Expr {
  enum class Kind {
    number,     // literal; `integer_literal` tells `1` from `1.0`
    access,     // name[subscripts...]; a bare name has no subscripts
    binary,     // operands[0] op operands[1]
    negate,     // -operands[0]
    select,     // select(operands[0] compare operands[1], operands[2], operands[3])
    construct,  // [operands...]
    index_ref,  // produced by analysis only: index `name` shifted by `offset`
  };

  Kind kind = Kind::number;
  double number = 0.0;
  bool integer_literal = false;
  std::string name;
  std::int64_t offset = 0;
  BinaryOp op = BinaryOp::add;
  CompareOp compare = CompareOp::le;
  std::vector<Expr> subscripts;
  std::vector<Expr> operands;
  SourceSpan span;

  bool operator==(const Expr&) const = default;
};

struct Identifier {
  std::string text;
  SourceSpan span;
  bool operator==(const Identifier&) const = default;
};

/// A dimension or index extent: an integer literal, or a named constant/index.
struct Extent {
  std::int64_t value = 0;
  std::string name;
  SourceSpan span;
  bool operator==(const Extent&) const = default;
};

struct ConstDecl {
  Identifier name;
  std::int64_t value = 0;
  SourceSpan span;
  bool operator==(const ConstDecl&) const = default;
};

struct IndexDecl {
  Identifier name;
  Extent extent;
  SourceSpan span;
  bool operator==(const IndexDecl&) const = default;
};

struct TensorDecl {
  Identifier name;
  bool scalar = false;
  std::vector<Extent> dims;
  std::optional<NumericFormat> element;  // empty: the analysis default format
  SourceSpan span;
  bool operator==(const TensorDecl&) const = default;
};

struct ParallelDecl {
  std::vector<Identifier> indices;
  SourceSpan span;
  bool operator==(const ParallelDecl&) const = default;
};

struct Statement {
  Identifier target;
  std::optional<std::vector<Identifier>> indices;
  Expr value;
  SourceSpan span;
  bool operator==(const Statement&) const = default;
};

using Item = std::variant<ConstDecl, IndexDecl, TensorDecl, ParallelDecl, Statement>;

struct KernelSource {
  std::vector<Item> items;
  bool operator==(const KernelSource&) const = default;
};

namespace detail {

inline void clear_span(SourceSpan& s) { s = SourceSpan{}; }

inline void strip(Expr& e) {
  clear_span(e.span);
  for (auto& s : e.subscripts) strip(s);
  for (auto& o : e.operands) strip(o);
}

inline void strip(Identifier& id) { clear_span(id.span); }
inline void strip(Extent& x) { clear_span(x.span); }

}  // namespace detail

/// Copy of `k` with every source span zeroed, for structural comparison.
inline KernelSource without_spans(KernelSource k) {
  using detail::strip;
  for (auto& item : k.items) {
    std::visit(
        [](auto& d) {
          using T = std::decay_t<decltype(d)>;
          detail::clear_span(d.span);
          if constexpr (std::is_same_v<T, ConstDecl>) {
            strip(d.name);
          } else if constexpr (std::is_same_v<T, IndexDecl>) {
            strip(d.name);
            strip(d.extent);
          } else if constexpr (std::is_same_v<T, TensorDecl>) {
            strip(d.name);
            for (auto& x : d.dims) strip(x);
          } else if constexpr (std::is_same_v<T, ParallelDecl>) {
            for (auto& i : d.indices) strip(i);
          } else {
            strip(d.target);
            if (d.indices)
              for (auto& i : *d.indices) strip(i);
            strip(d.value);
          }
        },
        item);
  }
  return k;
}

inline bool structurally_equal(const KernelSource& a, const KernelSource& b) {
  return without_spans(a) == without_spans(b);
}

}  // namespace basecamp::ekl
