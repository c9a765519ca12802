#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "basecamp/ir/kernel_ir.hpp"
#include "basecamp/numerics.hpp"

namespace basecamp::ir {

struct StatementCost {
  std::string output;
  std::int64_t macs = 0;
  std::int64_t elements_read = 0;
  std::int64_t elements_written = 0;
  double bytes_read = 0.0;
  double bytes_written = 0.0;
};

struct CostReport {
  std::vector<StatementCost> statements;
  std::int64_t macs = 0;
  std::int64_t elements_read = 0;
  std::int64_t elements_written = 0;
  double bytes_read = 0.0;
  double bytes_written = 0.0;
};

namespace detail {

inline std::int64_t count_muls(const Statement& st, int id) {
  const Node& n = st.nodes[id];
  std::int64_t c = n.op == Op::mul ? 1 : 0;
  for (int a : n.args) c += count_muls(st, a);
  for (const auto& ix : n.subscripts)
    if (ix.kind == IndexExpr::Kind::gather) c += count_muls(st, ix.access);
  return c;
}

inline void collect_operands(const Statement& st, int id, std::set<int>& out) {
  const Node& n = st.nodes[id];
  if (n.op == Op::access) out.insert(n.tensor);
  for (int a : n.args) collect_operands(st, a, out);
  for (const auto& ix : n.subscripts)
    if (ix.kind == IndexExpr::Kind::gather) collect_operands(st, ix.access, out);
}

}  // namespace detail

/// Static work and traffic estimate. A multiply-accumulate is counted for
/// every multiply evaluated per (free, reduce) assignment; for an in-place
/// construction only the selected element is evaluated. Every operand tensor
/// is read in full once per statement and the output written once, at
/// bit_width(f) bits per element.
inline CostReport cost(const KernelIR& ir, const NumericFormat& f) {
  CostReport r;
  double bytes_per = bit_width(f) / 8.0;
  for (const auto& st : ir.statements) {
    StatementCost c;
    c.output = ir.tensors[st.output].name;
    std::int64_t free = 1;
    std::int64_t reduce = 1;
    for (int i : st.free) free *= ir.indices[i].extent;
    for (int i : st.reduce) reduce *= ir.indices[i].extent;
    const Node& root = st.nodes[st.root];
    if (root.op == Op::construct) {
      // Each element is selected for free / extent(selector) output positions.
      std::int64_t per_element = free / ir.indices[root.selector].extent;
      for (int a : root.args) c.macs += per_element * reduce * detail::count_muls(st, a);
    } else {
      c.macs = free * reduce * detail::count_muls(st, st.root);
    }
    std::set<int> operands;
    detail::collect_operands(st, st.root, operands);
    for (int t : operands) c.elements_read += ir.tensors[t].size();
    c.elements_written = ir.tensors[st.output].size();
    c.bytes_read = static_cast<double>(c.elements_read) * bytes_per;
    c.bytes_written = static_cast<double>(c.elements_written) * bytes_per;

    r.macs += c.macs;
    r.elements_read += c.elements_read;
    r.elements_written += c.elements_written;
    r.bytes_read += c.bytes_read;
    r.bytes_written += c.bytes_written;
    r.statements.push_back(std::move(c));
  }
  return r;
}

}  // namespace basecamp::ir
