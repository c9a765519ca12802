#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/coord/dfg.hpp"
#include "basecamp/ir/compile.hpp"
#include "basecamp/ir/evaluate.hpp"
#include "basecamp/ir/json.hpp"
#include "basecamp/random.hpp"

namespace basecamp::coord {

/// A value travelling along an edge: its declared type tag and a JSON body.
struct Payload {
  std::string type;
  json value;
  bool operator==(const Payload&) const = default;
};

using NodeFunction = std::function<Payload(const DfgNode&, const std::vector<Payload>&)>;

struct Implementations {
  // Registered software functions and opaque kernels, by callee name.
  std::map<std::string, NodeFunction> functions;
  // Returns the source text of an `.ekl` implementation path.
  std::function<std::string(const std::string& path)> load_kernel;
  NumericFormat kernel_format;
};

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Runs a compiled EKL kernel on node arguments. Arguments bind to the
/// kernel's input tensors in declaration order; each is a tensor object
/// {"shape", "values"} or a flat array. A single output is returned as a
/// tensor object, several as an object keyed by tensor name.
inline json run_ekl_kernel(const ir::KernelIR& k, const std::vector<Payload>& args, const std::string& where) {
  std::vector<const ir::TensorInfo*> inputs;
  for (const auto& t : k.tensors)
    if (t.role == ekl::Role::input) inputs.push_back(&t);
  if (inputs.size() != args.size())
    throw ExecutionError(where + ": kernel takes " + std::to_string(inputs.size()) + " input(s), got " +
                         std::to_string(args.size()));
  ir::TensorMap in;
  for (std::size_t i = 0; i < args.size(); ++i) {
    ir::DenseTensor t = ir::tensor_from_json(args[i].value);
    if (t.shape != inputs[i]->shape && t.size() == inputs[i]->size()) t.shape = inputs[i]->shape;
    in[inputs[i]->name] = std::move(t);
  }
  ir::TensorMap out;
  try {
    out = ir::evaluate(k, in);
  } catch (const ir::EvaluationError& e) {
    throw ExecutionError(where + ": " + e.what());
  }
  if (out.size() == 1) return ir::to_json(out.begin()->second);
  json j = json::object();
  for (const auto& t : k.tensors)
    if (t.role == ekl::Role::output) j[t.name] = ir::to_json(out.at(t.name));
  return j;
}

/// Executes `g` once, visiting nodes in a random topological order drawn from
/// `schedule_seed`. Node lookup order: registered callee, `.ekl` path
/// (compiled and interpreted), other non-empty path (identity stub: the first
/// argument retagged with the declared type). A software node with neither is
/// an error, as is any payload whose type differs from its edge.
inline Payload execute_dfg(const DataflowGraph& g, const Implementations& impls, const std::vector<Payload>& inputs,
                           std::uint64_t schedule_seed) {
  if (inputs.size() != g.inputs.size())
    throw ExecutionError("graph '" + g.name + "' takes " + std::to_string(g.inputs.size()) + " input(s), got " +
                         std::to_string(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].type != g.inputs[i].type)
      throw ExecutionError("payload type mismatch at input '" + g.inputs[i].name + "': expected " + g.inputs[i].type +
                           ", got " + inputs[i].type);

  std::map<Endpoint, Payload> produced;
  for (std::size_t i = 0; i < inputs.size(); ++i) produced[{graph_input, static_cast<int>(i)}] = inputs[i];

  auto fetch = [&](const DfgEdge& e) -> Payload {
    auto it = produced.find(e.from);
    if (it == produced.end()) throw ExecutionError("value '" + e.value + "' read before it was produced");
    if (it->second.type != e.type)
      throw ExecutionError("payload type mismatch at edge '" + e.value + "': expected " + e.type + ", got " +
                           it->second.type);
    Payload p = std::move(it->second);
    produced.erase(it);  // single consumer: the value moves along the edge
    return p;
  };

  std::map<std::string, std::shared_ptr<ir::CompiledKernel>> kernels;
  Rng rng(schedule_seed);
  for (int id : random_topological_order(g, rng)) {
    const DfgNode& node = g.nodes[static_cast<std::size_t>(id)];
    std::vector<Payload> args;
    for (const DfgEdge* e : g.inputs_of(id)) args.push_back(fetch(*e));
    std::string where = "node " + std::to_string(id) + " ('" + node.callee + "')";

    if (node.is_clone()) {
      produced[{id, 0}] = args.at(0);
      produced[{id, 1}] = args.at(0);
      continue;
    }
    Payload out;
    if (auto f = impls.functions.find(node.callee); f != impls.functions.end()) {
      out = f->second(node, args);
    } else if (ends_with(node.path, ".ekl")) {
      auto& k = kernels[node.path];
      if (!k) {
        if (!impls.load_kernel) throw ExecutionError(where + ": no loader for kernel '" + node.path + "'");
        k = std::make_shared<ir::CompiledKernel>(ir::compile_kernel(impls.load_kernel(node.path), impls.kernel_format));
      }
      out = {node.output_types.at(0), run_ekl_kernel(k->ir, args, where)};
    } else if (!node.path.empty()) {
      out = {node.output_types.at(0), args.empty() ? json() : args.front().value};
    } else {
      throw ExecutionError(where + ": missing implementation for '" + node.callee + "'");
    }
    if (out.type != node.output_types.at(0))
      throw ExecutionError("payload type mismatch at " + where + " output: expected " + node.output_types.at(0) +
                           ", got " + out.type);
    produced[{id, 0}] = std::move(out);
  }

  for (const auto& e : g.edges)
    if (e.to.node == graph_output) return fetch(e);
  throw ExecutionError("graph '" + g.name + "' has no output");
}

}  // namespace basecamp::coord
