#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/ir/kernel_ir.hpp"
#include "basecamp/numerics.hpp"

namespace basecamp::ir {

/// Row-major value buffer. Every stored value is representable in `format`.
struct DenseTensor {
  std::vector<std::int64_t> shape;
  std::vector<double> values;
  NumericFormat format;

  static DenseTensor make(std::vector<std::int64_t> shape, std::vector<double> values,
                          NumericFormat format = NumericFormat::ieee_double()) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    if (static_cast<std::int64_t>(values.size()) != n)
      throw std::invalid_argument("tensor buffer has " + std::to_string(values.size()) +
                                  " values, shape needs " + std::to_string(n));
    for (auto& v : values) v = quantize(v, format);
    return DenseTensor{std::move(shape), std::move(values), format};
  }

  static DenseTensor zeros(std::vector<std::int64_t> shape, NumericFormat format) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return DenseTensor{std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0), format};
  }

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

  bool operator==(const DenseTensor&) const = default;
};

using TensorMap = std::map<std::string, DenseTensor>;

enum class EvalMode {
  quantize_on_store,  // accumulate in double, round once when the element is stored
  quantize_each_op,   // round after every add, subtract, multiply and negate
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct EvalContext {
  const KernelIR& ir;
  const Statement& st;
  std::size_t statement_no;
  std::vector<std::int64_t>& index_values;
  const std::vector<const DenseTensor*>& tensors;
  NumericFormat format;
  bool each_op;
  std::int64_t output_flat = 0;

  double round(double v) const { return each_op ? quantize(v, format) : v; }

  [[noreturn]] void fail(const Node& n, const std::string& what) const {
    throw EvaluationError("statement " + std::to_string(statement_no) + " ('" + ir.tensors[st.output].name +
                          "'), operand '" + ir.tensors[n.tensor].name + "', output position " +
                          std::to_string(output_flat) + ": " + what);
  }

  double eval(int id) const {
    const Node& n = st.nodes[id];
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::access: {
        const DenseTensor& t = *tensors[n.tensor];
        std::int64_t flat = 0;
        for (std::size_t d = 0; d < n.subscripts.size(); ++d) {
          const IndexExpr& ix = n.subscripts[d];
          std::int64_t pos = 0;
          if (ix.kind == IndexExpr::Kind::index) {
            pos = index_values[ix.index] + ix.offset;
          } else {
            double v = eval(ix.access);
            if (v != std::floor(v)) fail(n, "non-integral gather value " + std::to_string(v));
            pos = static_cast<std::int64_t>(v);
          }
          if (pos < 0 || pos >= t.shape[d])
            fail(n, "gather index " + std::to_string(pos) + " out of range [0, " + std::to_string(t.shape[d]) +
                        ") in dimension " + std::to_string(d));
          flat = flat * t.shape[d] + pos;
        }
        return t.values[static_cast<std::size_t>(flat)];
      }
      case Op::add: return round(eval(n.args[0]) + eval(n.args[1]));
      case Op::sub: return round(eval(n.args[0]) - eval(n.args[1]));
      case Op::mul: return round(eval(n.args[0]) * eval(n.args[1]));
      case Op::neg: return round(-eval(n.args[0]));
      case Op::select: {
        // Both branches are evaluated: expressions are pure.
        double a = eval(n.args[0]);
        double b = eval(n.args[1]);
        double yes = eval(n.args[2]);
        double no = eval(n.args[3]);
        return ekl::compare(n.compare, a, b) ? yes : no;
      }
      case Op::construct: return eval(n.args[static_cast<std::size_t>(index_values[n.selector])]);
    }
    return 0.0;
  }
};

/// Advances a row-major odometer over `ids`; returns false after the last state.
inline bool step(const KernelIR& ir, const std::vector<int>& ids, std::vector<std::int64_t>& values) {
  for (std::size_t k = ids.size(); k-- > 0;) {
    int id = ids[k];
    if (++values[id] < ir.indices[id].extent) return true;
    values[id] = 0;
  }
  return false;
}

}  // namespace detail

/// Runs every statement and returns all tensors, inputs included. Inputs are
/// rounded to their declared formats first.
inline TensorMap evaluate_all(const KernelIR& ir, const TensorMap& inputs,
                              EvalMode mode = EvalMode::quantize_on_store) {
  TensorMap env;
  for (const auto& t : ir.tensors) {
    if (t.role != Role::input) continue;
    auto it = inputs.find(t.name);
    if (it == inputs.end()) throw EvaluationError("missing input tensor '" + t.name + "'");
    if (it->second.shape != t.shape)
      throw EvaluationError("input tensor '" + t.name + "' has the wrong shape");
    env[t.name] = DenseTensor::make(t.shape, it->second.values, t.format);
  }

  std::vector<std::int64_t> index_values(ir.indices.size(), 0);
  for (std::size_t s = 0; s < ir.statements.size(); ++s) {
    const Statement& st = ir.statements[s];
    const TensorInfo& out_info = ir.tensors[st.output];
    DenseTensor out = DenseTensor::zeros(out_info.shape, out_info.format);

    std::vector<const DenseTensor*> tensors(ir.tensors.size(), nullptr);
    for (std::size_t t = 0; t < ir.tensors.size(); ++t) {
      if (auto it = env.find(ir.tensors[t].name); it != env.end()) tensors[t] = &it->second;
    }
    detail::EvalContext ctx{ir, st, s, index_values, tensors, out_info.format, mode == EvalMode::quantize_each_op};

    for (int id : st.free) index_values[id] = 0;
    std::int64_t flat = 0;
    do {
      ctx.output_flat = flat;
      for (int id : st.reduce) index_values[id] = 0;
      double acc = 0.0;
      do {
        acc = ctx.round(acc + ctx.eval(st.root));
      } while (detail::step(ir, st.reduce, index_values));
      out.values[static_cast<std::size_t>(flat)] = quantize(acc, out_info.format);
      ++flat;
    } while (detail::step(ir, st.free, index_values));
    env[out_info.name] = std::move(out);
  }
  return env;
}

/// Runs the kernel and returns its output tensors.
inline TensorMap evaluate(const KernelIR& ir, const TensorMap& inputs, EvalMode mode = EvalMode::quantize_on_store) {
  TensorMap all = evaluate_all(ir, inputs, mode);
  TensorMap out;
  for (const auto& t : ir.tensors)
    if (t.role == Role::output) out[t.name] = std::move(all.at(t.name));
  return out;
}

}  // namespace basecamp::ir
