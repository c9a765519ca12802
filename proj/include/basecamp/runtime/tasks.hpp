#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/runtime/cluster.hpp"

namespace basecamp::runtime {

enum class Variant { cpu, fpga };

inline const char* to_string(Variant v) { return v == Variant::cpu ? "cpu" : "fpga"; }

struct TaskInput {
  std::size_t producer = 0;  // task index
  double bytes = 0;
};

/// A task asks for `cores` cores or `vfs` virtual functions. An fpga task
/// that also has a cpu duration may fall back to cores when no live fpga
/// node can take it.
struct Task {
  std::string id;
  Variant request = Variant::cpu;
  int cores = 1;
  int vfs = 1;
  std::optional<double> cpu_us;
  std::optional<double> fpga_us;
  std::optional<int> plan_node;  // fpga duration comes from this planned kernel
  std::vector<TaskInput> inputs;
  std::vector<std::string> knobs;  // knob names this task reacts to

  bool has_fallback() const { return request == Variant::fpga && cpu_us.has_value(); }
  double duration(Variant v) const { return v == Variant::cpu ? *cpu_us : *fpga_us; }
  int amount(Variant v) const { return v == Variant::cpu ? cores : vfs; }
};

struct Knob {
  std::string name;
  std::vector<std::string> values;
};

struct TaskGraph {
  std::vector<Task> tasks;
  std::vector<Knob> knobs;

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i].id == id) return i;
    throw std::out_of_range("unknown task '" + id + "'");
  }

  /// Graph-submission entry point: inputs must already be submitted, which
  /// keeps the graph acyclic by construction.
  std::size_t submit(Task t, const std::vector<std::pair<std::string, double>>& deps = {}) {
    for (const auto& [id, bytes] : deps) t.inputs.push_back({index_of(id), bytes});
    tasks.push_back(std::move(t));
    return tasks.size() - 1;
  }
};

class TaskGraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Edges numbered consumer by consumer, inputs in order: edge_base(g)[t] + i
/// is input i of task t. The last entry is the edge count.
inline std::vector<std::size_t> edge_base(const TaskGraph& g) {
  std::vector<std::size_t> base(g.tasks.size() + 1, 0);
  for (std::size_t t = 0; t < g.tasks.size(); ++t) base[t + 1] = base[t] + g.tasks[t].inputs.size();
  return base;
}

inline std::vector<std::vector<std::size_t>> consumers(const TaskGraph& g) {
  std::vector<std::vector<std::size_t>> out(g.tasks.size());
  for (std::size_t t = 0; t < g.tasks.size(); ++t)
    for (const auto& in : g.tasks[t].inputs) out[in.producer].push_back(t);
  return out;
}

/// Kahn order, smallest index first among ready tasks.
inline std::vector<std::size_t> topological_order(const TaskGraph& g) {
  std::vector<std::size_t> indegree(g.tasks.size(), 0);
  auto succ = consumers(g);
  for (std::size_t t = 0; t < g.tasks.size(); ++t) indegree[t] = g.tasks[t].inputs.size();
  std::set<std::size_t> ready;
  for (std::size_t t = 0; t < g.tasks.size(); ++t)
    if (indegree[t] == 0) ready.insert(t);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::size_t t = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(t);
    for (std::size_t s : succ[t])
      if (--indegree[s] == 0) ready.insert(s);
  }
  if (order.size() != g.tasks.size()) throw TaskGraphError("task graph has a cycle");
  return order;
}

inline void validate(const TaskGraph& g) {
  std::set<std::string> ids;
  for (const auto& t : g.tasks) {
    if (!ids.insert(t.id).second) throw TaskGraphError("duplicate task id '" + t.id + "'");
    if (t.request == Variant::fpga && !t.fpga_us) throw TaskGraphError("fpga task '" + t.id + "' has no fpga duration");
    if (t.request == Variant::cpu && !t.cpu_us) throw TaskGraphError("cpu task '" + t.id + "' has no cpu duration");
    if ((t.cpu_us && *t.cpu_us < 0) || (t.fpga_us && *t.fpga_us < 0))
      throw TaskGraphError("task '" + t.id + "' has a negative duration");
    if (t.cores < 1 || t.vfs < 1) throw TaskGraphError("task '" + t.id + "' requests no resources");
    for (const auto& in : t.inputs) {
      if (in.producer >= g.tasks.size()) throw TaskGraphError("task '" + t.id + "' reads an unknown task");
      if (in.bytes < 0) throw TaskGraphError("task '" + t.id + "' has a negative input size");
    }
  }
  std::set<std::string> knob_names;
  for (const auto& k : g.knobs) {
    if (k.values.empty()) throw TaskGraphError("knob '" + k.name + "' has no values");
    knob_names.insert(k.name);
  }
  for (const auto& t : g.tasks)
    for (const auto& k : t.knobs)
      if (!knob_names.count(k)) throw TaskGraphError("task '" + t.id + "' binds unknown knob '" + k + "'");
  topological_order(g);
}

/// Every request is satisfiable by some node of the cluster.
inline void check_feasible(const TaskGraph& g, const ClusterSpec& c) {
  for (const auto& t : g.tasks) {
    bool ok = false;
    for (const auto& n : c.nodes) {
      if (t.request == Variant::fpga && n.kind == NodeKind::fpga && n.vf_count >= t.vfs) ok = true;
      if ((t.request == Variant::cpu || t.has_fallback()) && n.cores >= t.cores) ok = true;
    }
    if (!ok) throw TaskGraphError("task '" + t.id + "': no node can satisfy its request");
  }
}

using Configuration = std::map<std::string, std::string>;

/// Binds knob values: `variant` picks the cpu or fpga implementation,
/// `replication` spreads an fpga task over that many VFs.
inline TaskGraph apply_configuration(TaskGraph g, const Configuration& cfg) {
  for (auto& t : g.tasks) {
    for (const auto& k : t.knobs) {
      auto it = cfg.find(k);
      if (it == cfg.end()) continue;
      if (k == "variant") {
        if (it->second == "cpu") {
          if (!t.cpu_us) throw TaskGraphError("task '" + t.id + "' has no cpu variant");
          t.request = Variant::cpu;
        } else if (it->second == "fpga") {
          if (!t.fpga_us) throw TaskGraphError("task '" + t.id + "' has no fpga variant");
          t.request = Variant::fpga;
        } else {
          throw TaskGraphError("unknown variant '" + it->second + "'");
        }
      } else if (k == "replication") {
        int r = std::stoi(it->second);
        if (r < 1) throw TaskGraphError("replication must be >= 1");
        t.vfs = r;
        if (t.fpga_us) *t.fpga_us /= r;
      }
    }
  }
  return g;
}

inline json to_json(const TaskGraph& g) {
  json tasks = json::array();
  for (const auto& t : g.tasks) {
    json j = {{"id", t.id}, {"request", to_string(t.request)}, {"cores", t.cores}, {"vfs", t.vfs}};
    if (t.cpu_us) j["cpu_us"] = *t.cpu_us;
    if (t.fpga_us) j["fpga_us"] = *t.fpga_us;
    if (t.plan_node) j["plan_node"] = *t.plan_node;
    json ins = json::array();
    for (const auto& in : t.inputs) ins.push_back({{"from", g.tasks[in.producer].id}, {"bytes", in.bytes}});
    j["inputs"] = ins;
    if (!t.knobs.empty()) j["knobs"] = t.knobs;
    tasks.push_back(j);
  }
  json out = {{"tasks", tasks}};
  if (!g.knobs.empty()) {
    json knobs = json::array();
    for (const auto& k : g.knobs) knobs.push_back({{"name", k.name}, {"values", k.values}});
    out["knobs"] = knobs;
  }
  return out;
}

/// Parses a task graph. `plan_durations` maps planned kernel node ids to
/// their makespans and fills `fpga_us` for tasks naming a `plan_node`.
inline TaskGraph task_graph_from_json(const json& j, const std::map<int, double>& plan_durations = {}) {
  TaskGraph g;
  try {
    std::map<std::string, std::size_t> index;
    for (const auto& x : j.at("tasks")) {
      Task t;
      t.id = x.at("id").get<std::string>();
      std::string req = x.value("request", std::string("cpu"));
      if (req == "cpu") {
        t.request = Variant::cpu;
      } else if (req == "fpga") {
        t.request = Variant::fpga;
      } else {
        throw TaskGraphError("task '" + t.id + "': unknown request '" + req + "'");
      }
      t.cores = x.value("cores", 1);
      t.vfs = x.value("vfs", 1);
      if (x.contains("cpu_us")) t.cpu_us = x.at("cpu_us").get<double>();
      if (x.contains("fpga_us")) t.fpga_us = x.at("fpga_us").get<double>();
      if (x.contains("plan_node")) {
        t.plan_node = x.at("plan_node").get<int>();
        auto it = plan_durations.find(*t.plan_node);
        if (it != plan_durations.end()) {
          t.fpga_us = it->second;
        } else if (!t.fpga_us) {
          throw TaskGraphError("task '" + t.id + "': plan has no kernel for node " + std::to_string(*t.plan_node));
        }
      }
      if (x.contains("inputs"))
        for (const auto& in : x.at("inputs")) {
          std::string from = in.at("from").get<std::string>();
          auto it = index.find(from);
          if (it == index.end()) throw TaskGraphError("task '" + t.id + "' reads '" + from + "', which is not defined before it");
          t.inputs.push_back({it->second, in.value("bytes", 0.0)});
        }
      if (x.contains("knobs")) t.knobs = x.at("knobs").get<std::vector<std::string>>();
      if (!index.emplace(t.id, g.tasks.size()).second) throw TaskGraphError("duplicate task id '" + t.id + "'");
      g.tasks.push_back(std::move(t));
    }
    if (j.contains("knobs"))
      for (const auto& k : j.at("knobs"))
        g.knobs.push_back({k.at("name").get<std::string>(), k.at("values").get<std::vector<std::string>>()});
  } catch (const json::exception& e) {
    throw TaskGraphError(std::string("malformed task graph JSON: ") + e.what());
  }
  validate(g);
  return g;
}

}  // namespace basecamp::runtime
