#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "basecamp/coord/parser.hpp"
#include "basecamp/diagnostic.hpp"
#include "basecamp/random.hpp"

namespace basecamp::coord {

using json = nlohmann::ordered_json;

enum class NodeKind { software, offloaded_kernel };

inline const char* to_string(NodeKind k) { return k == NodeKind::software ? "software" : "offloaded-kernel"; }

struct DfgNode {
  int id = 0;
  std::string callee;
  std::string label;  // bound name, or "<result>" for the trailing call
  NodeKind kind = NodeKind::software;
  bool has_attribute = false;
  bool offloaded = false;
  std::vector<std::int64_t> multiplicity;
  std::string path;
  std::vector<std::string> input_types;
  std::vector<std::string> output_types;  // clone nodes have two outputs
  std::optional<json> cost;               // {macs, bytes_in, bytes_out, format?}
  SourceSpan span;

  bool is_clone() const { return callee == "clone" && !has_attribute; }
};

/// node == graph_input: port is the parameter position.
/// node == graph_output: port is 0.
struct Endpoint {
  int node = 0;
  int port = 0;
  bool operator==(const Endpoint&) const = default;
  auto operator<=>(const Endpoint&) const = default;
};

inline constexpr int graph_input = -1;
inline constexpr int graph_output = -2;

struct DfgEdge {
  Endpoint from;
  Endpoint to;
  std::string type;
  std::string value;  // source-level name carried by the edge
};

struct GraphParam {
  std::string name;
  std::string type;
};

struct DataflowGraph {
  std::string name;
  std::vector<GraphParam> inputs;
  std::string output_type;
  std::vector<DfgNode> nodes;
  std::vector<DfgEdge> edges;

  std::size_t call_nodes() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const DfgNode& n) { return !n.is_clone(); }));
  }

  /// Edges ending at `node`, ordered by input port.
  std::vector<const DfgEdge*> inputs_of(int node) const {
    std::vector<const DfgEdge*> out;
    for (const auto& e : edges)
      if (e.to.node == node) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const DfgEdge* a, const DfgEdge* b) { return a->to.port < b->to.port; });
    return out;
  }

  /// Nodes `node` depends on directly (graph inputs excluded), deduplicated.
  std::vector<int> predecessors(int node) const {
    std::vector<int> out;
    for (const auto& e : edges)
      if (e.to.node == node && e.from.node >= 0 &&
          std::find(out.begin(), out.end(), e.from.node) == out.end())
        out.push_back(e.from.node);
    std::sort(out.begin(), out.end());
    return out;
  }
};

namespace detail {

struct Value {
  Endpoint producer;
  std::string type;
  SourceSpan defined;
  std::optional<SourceSpan> consumed;
  std::size_t order = 0;
};

class DfgBuilder {
 public:
  DataflowGraph build(const CoordFunction& f) {
    g_.name = f.name.text;
    g_.output_type = f.result_type.text;
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      const auto& p = f.params[i];
      g_.inputs.push_back({p.name.text, p.type.text});
      define(p.name, p.type.text, {graph_input, static_cast<int>(i)});
    }
    for (const auto& b : f.bindings) binding(b);
    if (f.result_call) {
      int id = call_node(*f.result_call, nullptr, "<result>", f.result_type.text);
      if (id >= 0) g_.edges.push_back({{id, 0}, {graph_output, 0}, f.result_type.text, "<result>"});
    } else if (f.result_name) {
      if (Value* v = use(*f.result_name)) {
        if (v->type != f.result_type.text)
          error("type-mismatch",
                "'" + f.result_name->text + "' has type " + v->type + " but the function returns " + f.result_type.text,
                f.result_name->span);
        g_.edges.push_back({v->producer, {graph_output, 0}, v->type, f.result_name->text});
      }
    }
    std::vector<std::pair<std::string, const Value*>> left;
    for (const auto& [name, v] : values_)
      if (!v.consumed) left.emplace_back(name, &v);
    std::sort(left.begin(), left.end(), [](const auto& a, const auto& b) { return a.second->order < b.second->order; });
    for (const auto& [name, v] : left)
      error("never-consumed", "value '" + name + "' is never consumed", v->defined);
    if (!diags_.empty()) throw CompileError(std::move(diags_));
    return std::move(g_);
  }

 private:
  void error(const char* code, std::string message, SourceSpan span, std::optional<SourceSpan> related = {}) {
    diags_.push_back(Diagnostic{std::move(message), span, {}, code, related});
  }

  void define(const Name& n, const std::string& type, Endpoint producer) {
    if (values_.count(n.text)) {
      error("redefinition", "'" + n.text + "' is already defined", n.span, values_[n.text].defined);
      return;
    }
    values_[n.text] = Value{producer, type, n.span, std::nullopt, order_++};
  }

  Value* lookup(const Name& n) {
    auto it = values_.find(n.text);
    if (it == values_.end()) {
      error("unknown-name", "unknown name '" + n.text + "'", n.span);
      return nullptr;
    }
    return &it->second;
  }

  // Looks up and consumes `n`; reports a second consumption.
  Value* use(const Name& n) {
    Value* v = lookup(n);
    if (!v) return nullptr;
    if (v->consumed) {
      error("consumed-twice", "value '" + n.text + "' is consumed twice; duplicate it with clone(" + n.text + ")",
            n.span, v->consumed);
      return nullptr;
    }
    v->consumed = n.span;
    return v;
  }

  int call_node(const Call& c, const KernelAttribute* attr, const std::string& label, const std::string& out_type) {
    DfgNode node;
    node.id = static_cast<int>(g_.nodes.size());
    node.callee = c.callee.text;
    node.label = label;
    node.span = c.span;
    node.output_types = {out_type};
    if (attr) {
      node.has_attribute = true;
      node.offloaded = attr->offloaded;
      node.multiplicity = attr->multiplicity;
      node.path = attr->path;
      node.kind = attr->offloaded ? NodeKind::offloaded_kernel : NodeKind::software;
    }
    std::vector<DfgEdge> in;
    bool ok = true;
    for (std::size_t k = 0; k < c.args.size(); ++k) {
      Value* v = use(c.args[k]);
      if (!v) {
        ok = false;
        continue;
      }
      node.input_types.push_back(v->type);
      in.push_back({v->producer, {node.id, static_cast<int>(k)}, v->type, c.args[k].text});
    }
    if (!ok) return -1;
    g_.nodes.push_back(std::move(node));
    for (auto& e : in) g_.edges.push_back(std::move(e));
    return g_.nodes.back().id;
  }

  void binding(const Binding& b) {
    if (b.call.callee.text == "clone" && !b.attribute) {
      if (b.call.args.size() != 1) {
        error("clone-arity", "clone takes exactly one argument", b.call.span);
        return;
      }
      const Name& src = b.call.args[0];
      Value* v = lookup(src);
      if (!v) return;
      if (v->consumed) {
        error("consumed-twice", "value '" + src.text + "' is cloned after it was consumed", src.span, v->consumed);
        return;
      }
      if (v->type != b.type.text) {
        error("type-mismatch", "clone of '" + src.text + "' (type " + v->type + ") declared as " + b.type.text,
              b.type.span);
        return;
      }
      // clone borrows its argument: later uses of `src` read the pass-through
      // port, the new name reads the copy.
      DfgNode node;
      node.id = static_cast<int>(g_.nodes.size());
      node.callee = "clone";
      node.label = b.name.text;
      node.span = b.call.span;
      node.input_types = {v->type};
      node.output_types = {v->type, v->type};
      g_.edges.push_back({v->producer, {node.id, 0}, v->type, src.text});
      v->producer = {node.id, 0};
      g_.nodes.push_back(std::move(node));
      define(b.name, b.type.text, {g_.nodes.back().id, 1});
      return;
    }
    int id = call_node(b.call, b.attribute ? &*b.attribute : nullptr, b.name.text, b.type.text);
    define(b.name, b.type.text, {id < 0 ? graph_input : id, 0});
  }

  DataflowGraph g_;
  std::map<std::string, Value> values_;
  std::size_t order_ = 0;
  std::vector<Diagnostic> diags_;
};

}  // namespace detail

/// One node per call (plus one per clone), one edge per consumed value.
/// Throws CompileError with codes consumed-twice, never-consumed,
/// unknown-name, redefinition, type-mismatch or clone-arity.
inline DataflowGraph build_dfg(const CoordFunction& f) { return detail::DfgBuilder().build(f); }

/// Structural checks: acyclic, every producer port feeds exactly one edge,
/// offloaded nodes carry a path. Returns the problems found (empty if valid).
inline std::vector<std::string> validate(const DataflowGraph& g) {
  std::vector<std::string> problems;
  std::map<Endpoint, int> uses;
  for (const auto& e : g.edges) {
    if (e.from.node >= static_cast<int>(g.nodes.size()) || e.to.node >= static_cast<int>(g.nodes.size()))
      problems.push_back("edge refers to a missing node");
    if (++uses[e.from] > 1)
      problems.push_back("producer " + std::to_string(e.from.node) + ":" + std::to_string(e.from.port) +
                         " has more than one consumer");
  }
  for (const auto& n : g.nodes)
    if (n.kind == NodeKind::offloaded_kernel && n.path.empty())
      problems.push_back("offloaded node " + std::to_string(n.id) + " has no implementation path");
  // Kahn's algorithm; anything left over sits on a cycle.
  std::vector<int> indeg(g.nodes.size(), 0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) indeg[i] = static_cast<int>(g.predecessors(static_cast<int>(i)).size());
  std::vector<int> ready;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
  std::size_t seen = 0;
  while (!ready.empty()) {
    int n = ready.back();
    ready.pop_back();
    ++seen;
    for (std::size_t j = 0; j < g.nodes.size(); ++j) {
      auto p = g.predecessors(static_cast<int>(j));
      if (std::find(p.begin(), p.end(), n) != p.end() && --indeg[j] == 0) ready.push_back(static_cast<int>(j));
    }
  }
  if (seen != g.nodes.size()) problems.push_back("graph has a cycle");
  return problems;
}

/// A topological order chosen uniformly among the ready nodes at every step.
inline std::vector<int> random_topological_order(const DataflowGraph& g, Rng& rng) {
  std::size_t n = g.nodes.size();
  std::vector<std::vector<int>> succ(n);
  std::vector<int> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int p : g.predecessors(static_cast<int>(i))) {
      succ[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
      ++indeg[i];
    }
  }
  std::vector<int> ready, order;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
  while (!ready.empty()) {
    std::size_t k = rng.below(ready.size());
    int v = ready[k];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(k));
    order.push_back(v);
    for (int s : succ[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
  }
  if (order.size() != n) throw std::invalid_argument("dataflow graph has a cycle");
  return order;
}

// --- JSON ---------------------------------------------------------------

inline json endpoint_json(const Endpoint& e) {
  if (e.node == graph_input) return {{"input", e.port}};
  if (e.node == graph_output) return {{"output", e.port}};
  return {{"node", e.node}, {"port", e.port}};
}

inline Endpoint endpoint_from_json(const json& j) {
  if (j.contains("input")) return {graph_input, j.at("input").get<int>()};
  if (j.contains("output")) return {graph_output, j.at("output").get<int>()};
  return {j.at("node").get<int>(), j.at("port").get<int>()};
}

inline json to_json(const DataflowGraph& g) {
  json j;
  j["name"] = g.name;
  json inputs = json::array();
  for (const auto& p : g.inputs) inputs.push_back({{"name", p.name}, {"type", p.type}});
  j["inputs"] = std::move(inputs);
  j["output_type"] = g.output_type;
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["callee"] = n.callee;
    jn["label"] = n.label;
    jn["kind"] = to_string(n.kind);
    if (n.has_attribute) {
      jn["offloaded"] = n.offloaded;
      jn["multiplicity"] = n.multiplicity;
      jn["path"] = n.path;
    }
    jn["input_types"] = n.input_types;
    jn["output_types"] = n.output_types;
    if (n.cost) jn["cost"] = *n.cost;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", endpoint_json(e.from)}, {"to", endpoint_json(e.to)}, {"type", e.type}, {"value", e.value}});
  j["edges"] = std::move(edges);
  return j;
}

inline DataflowGraph dfg_from_json(const json& j) {
  DataflowGraph g;
  g.name = j.value("name", "");
  for (const auto& p : j.at("inputs")) g.inputs.push_back({p.at("name").get<std::string>(), p.at("type").get<std::string>()});
  g.output_type = j.value("output_type", "");
  for (const auto& jn : j.at("nodes")) {
    DfgNode n;
    n.id = jn.at("id").get<int>();
    n.callee = jn.at("callee").get<std::string>();
    n.label = jn.value("label", "");
    n.kind = jn.value("kind", "software") == "offloaded-kernel" ? NodeKind::offloaded_kernel : NodeKind::software;
    if (jn.contains("path") || jn.contains("offloaded") || jn.contains("multiplicity")) {
      n.has_attribute = true;
      n.offloaded = jn.value("offloaded", false);
      n.multiplicity = jn.value("multiplicity", std::vector<std::int64_t>{});
      n.path = jn.value("path", "");
    }
    n.input_types = jn.value("input_types", std::vector<std::string>{});
    n.output_types = jn.value("output_types", std::vector<std::string>{});
    if (jn.contains("cost")) n.cost = jn.at("cost");
    if (n.id != static_cast<int>(g.nodes.size())) throw std::invalid_argument("dfg nodes must be numbered 0..n-1 in order");
    g.nodes.push_back(std::move(n));
  }
  for (const auto& je : j.at("edges"))
    g.edges.push_back({endpoint_from_json(je.at("from")), endpoint_from_json(je.at("to")), je.value("type", ""),
                       je.value("value", "")});
  return g;
}

}  // namespace basecamp::coord
