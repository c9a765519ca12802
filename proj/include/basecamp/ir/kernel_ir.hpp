#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "basecamp/ekl/analyzer.hpp"
#include "basecamp/ekl/ast.hpp"
#include "basecamp/numerics.hpp"

namespace basecamp::ir {

using ekl::CompareOp;
using ekl::Role;

struct TensorInfo {
  std::string name;
  std::vector<std::int64_t> shape;
  NumericFormat format;
  Role role = Role::input;

  std::int64_t size() const {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
  }
};

struct IndexInfo {
  std::string name;
  std::int64_t extent = 1;
};

struct IndexExpr {
  enum class Kind { index, gather };
  Kind kind = Kind::index;
  int index = -1;           // Kind::index
  std::int64_t offset = 0;  // Kind::index
  int access = -1;          // Kind::gather: node id of an integer-valued access
};

enum class Op { constant, access, add, sub, mul, neg, select, construct };

/// Expression node. Statements own their nodes in a flat arena and refer to
/// children by position.
struct Node {
  Op op = Op::constant;
  double value = 0.0;                // constant
  int tensor = -1;                   // access
  std::vector<IndexExpr> subscripts; // access
  std::vector<int> args;             // operands; select: lhs, rhs, then, else
  CompareOp compare = CompareOp::le; // select
  int selector = -1;                 // construct: index id picking the element
};

struct Statement {
  int output = -1;
  std::vector<int> free;    // index ids, output dimension order
  std::vector<int> reduce;  // index ids, declaration order
  std::vector<Node> nodes;
  int root = -1;
};

struct KernelIR {
  std::vector<TensorInfo> tensors;
  std::vector<IndexInfo> indices;
  std::vector<Statement> statements;

  int find_tensor(std::string_view name) const {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      if (tensors[i].name == name) return static_cast<int>(i);
    return -1;
  }
  int find_index(std::string_view name) const {
    for (std::size_t i = 0; i < indices.size(); ++i)
      if (indices[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

}  // namespace basecamp::ir
