#pragma once

// Independent checks of simulator traces and schedules, written against the
// event list only.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "basecamp/random.hpp"
#include "basecamp/runtime/scheduler.hpp"
#include "basecamp/runtime/simulator.hpp"

namespace basecamp::testing {

using namespace basecamp::runtime;

/// Empty when the trace is consistent, else the first violation.
inline std::string check_trace(const TaskGraph& g, const ClusterSpec& c, const SimTrace& tr) {
  std::size_t m = c.nodes.size();
  std::vector<bool> dead(m, false);
  std::vector<int> cores(m, 0);
  std::vector<std::vector<std::optional<std::size_t>>> vf(m);
  for (std::size_t n = 0; n < m; ++n) vf[n].assign(static_cast<std::size_t>(c.nodes[n].vf_count), std::nullopt);
  // Data that exists: (producer, consumer, node) for moved inputs and
  // (producer, no_index, node) where the producer ran.
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> data;
  std::map<std::size_t, std::pair<std::size_t, double>> running;  // task -> (node, start)
  double last = 0;
  auto at = [](const SimEvent& e) { return " at t=" + std::to_string(e.time); };
  for (const auto& e : tr.events) {
    if (e.time < last) return "time goes backwards" + at(e);
    last = e.time;
    switch (e.kind) {
      case EventKind::node_fail:
        dead[e.node] = true;
        cores[e.node] = 0;
        std::fill(vf[e.node].begin(), vf[e.node].end(), std::nullopt);
        for (auto it = running.begin(); it != running.end();)
          it = it->second.first == e.node ? running.erase(it) : std::next(it);
        for (auto it = data.begin(); it != data.end();) it = std::get<2>(*it) == e.node ? data.erase(it) : std::next(it);
        break;
      case EventKind::vf_attach: {
        if (dead[e.node]) return "attach on a failed node" + at(e);
        auto& slot = vf[e.node].at(static_cast<std::size_t>(e.vf));
        if (slot) return "VF " + std::to_string(e.vf) + " attached twice" + at(e);
        slot = e.task;
        break;
      }
      case EventKind::vf_detach: {
        auto& slot = vf[e.node].at(static_cast<std::size_t>(e.vf));
        if (slot != e.task) return "detach of a VF the VM does not hold" + at(e);
        slot.reset();
        break;
      }
      case EventKind::task_start: {
        if (dead[e.node]) return "task starts on a failed node" + at(e);
        const Task& t = g.tasks[e.task];
        for (const auto& in : t.inputs)
          if (!data.count({in.producer, no_index, e.node}) && !data.count({in.producer, e.task, e.node}))
            return "task '" + t.id + "' starts before input '" + g.tasks[in.producer].id + "' is on its node" + at(e);
        if (running.count(e.task)) return "task '" + t.id + "' starts twice" + at(e);
        running[e.task] = {e.node, e.time};
        if (e.variant == Variant::cpu) {
          cores[e.node] += e.amount;
          if (cores[e.node] > c.nodes[e.node].cores) return "core capacity exceeded on " + c.nodes[e.node].id + at(e);
        } else {
          int held = 0;
          for (const auto& s : vf[e.node]) held += s == e.task;
          if (held != t.vfs) return "task '" + t.id + "' runs without its VFs" + at(e);
        }
        break;
      }
      case EventKind::task_end: {
        auto it = running.find(e.task);
        if (it == running.end() || it->second.first != e.node) return "task ends without starting" + at(e);
        if (e.time < it->second.second) return "task ends before it starts" + at(e);
        running.erase(it);
        if (e.variant == Variant::cpu) cores[e.node] -= e.amount;
        data.insert({e.task, no_index, e.node});
        break;
      }
      case EventKind::transfer_start:
        if (!data.count({e.task, no_index, e.node}) && !data.count({e.task, e.consumer, e.node}))
          return "transfer from a node without the data" + at(e);
        break;
      case EventKind::transfer_end:
        if (!dead[e.dst]) data.insert({e.task, e.consumer, e.dst});
        break;
      case EventKind::reschedule:
        break;
    }
  }
  return "";
}

/// Every task has a final task-end and none is left unfinished.
inline bool all_completed(const TaskGraph& g, const SimTrace& tr) {
  std::set<std::size_t> ended;
  for (const auto& e : tr.events)
    if (e.kind == EventKind::task_end) ended.insert(e.task);
  return tr.unfinished.empty() && ended.size() == g.tasks.size();
}

/// Capacity of a static schedule, checked by sweeping interval endpoints.
inline bool schedule_respects_capacity(const TaskGraph& g, const ClusterSpec& c, const Schedule& s) {
  for (std::size_t n = 0; n < c.nodes.size(); ++n)
    for (Variant v : {Variant::cpu, Variant::fpga}) {
      int cap = v == Variant::cpu ? c.nodes[n].cores : c.nodes[n].vf_count;
      for (std::size_t a = 0; a < g.tasks.size(); ++a) {
        const Placement& pa = s.tasks[a];
        if (pa.node != n || pa.variant != v) continue;
        int load = 0;
        for (std::size_t b = 0; b < g.tasks.size(); ++b) {
          const Placement& pb = s.tasks[b];
          if (pb.node == n && pb.variant == v && pb.start <= pa.start && pa.start < pb.finish)
            load += g.tasks[b].amount(v);
        }
        if (pa.start < pa.finish && load > cap) return false;
      }
    }
  return true;
}

inline Variant healthy_variant(const Task& t, const ClusterSpec& c) {
  for (const auto& n : c.nodes)
    if (supports(n, t, t.request)) return t.request;
  return Variant::cpu;
}

/// Longest dependency chain of task durations.
inline double critical_path_length(const TaskGraph& g, const ClusterSpec& c) {
  std::vector<double> finish(g.tasks.size(), 0.0);
  double best = 0;
  for (std::size_t t = 0; t < g.tasks.size(); ++t) {  // inputs precede their consumers
    double start = 0;
    for (const auto& in : g.tasks[t].inputs) start = std::max(start, finish[in.producer]);
    finish[t] = start + g.tasks[t].duration(healthy_variant(g.tasks[t], c));
    best = std::max(best, finish[t]);
  }
  return best;
}

/// Running tasks one after another, paying every edge's dearest transfer.
inline double serial_bound(const TaskGraph& g, const ClusterSpec& c) {
  double total = 0;
  for (const auto& t : g.tasks) {
    total += t.duration(healthy_variant(t, c));
    for (const auto& in : t.inputs) {
      double worst = 0;
      for (const auto& a : c.nodes)
        for (const auto& b : c.nodes) worst = std::max(worst, transfer_time(a, b, in.bytes));
      total += worst;
    }
  }
  return total;
}

struct Scenario {
  TaskGraph graph;
  ClusterSpec cluster;
};

/// Random DAG on a random mixed cluster. With `survivable`, any single node
/// can fail and every task still has somewhere to run.
inline Scenario random_scenario(Rng& rng, bool survivable) {
  Scenario s;
  int n_nodes = static_cast<int>(rng.between(survivable ? 2 : 1, 4));
  int max_cores = 0, max_vfs = 0, fpga_nodes = 0;
  for (int i = 0; i < n_nodes; ++i) {
    NodeSpec n;
    n.id = "n" + std::to_string(i);
    n.kind = rng.bernoulli(0.4) ? NodeKind::fpga : NodeKind::cpu;
    n.cores = static_cast<int>(rng.between(n.kind == NodeKind::fpga ? 0 : 1, 4));
    if (n.kind == NodeKind::fpga) {
      n.vf_count = static_cast<int>(rng.between(1, 3));
      ++fpga_nodes;
    }
    n.bandwidth = rng.uniform(10, 1000);
    n.latency = rng.uniform(0, 10);
    s.cluster.nodes.push_back(n);
  }
  // One node (two when failures must be survivable) runs at least one core.
  for (int i = 0; i < (survivable ? 2 : 1); ++i) {
    auto& n = s.cluster.nodes[static_cast<std::size_t>(i)];
    n.cores = std::max(1, n.cores);
  }
  std::vector<int> core_counts;
  for (const auto& n : s.cluster.nodes) {
    max_cores = std::max(max_cores, n.cores);
    max_vfs = std::max(max_vfs, n.vf_count);
    core_counts.push_back(n.cores);
  }
  std::sort(core_counts.rbegin(), core_counts.rend());
  int safe_cores = survivable ? core_counts[1] : max_cores;  // held by at least two nodes
  std::vector<int> vf_counts;
  for (const auto& n : s.cluster.nodes)
    if (n.kind == NodeKind::fpga) vf_counts.push_back(n.vf_count);
  std::sort(vf_counts.rbegin(), vf_counts.rend());

  int n_tasks = static_cast<int>(rng.between(1, 20));
  for (int i = 0; i < n_tasks; ++i) {
    Task t;
    t.id = "t" + std::to_string(i);
    t.cores = static_cast<int>(rng.between(1, std::max(1, safe_cores)));
    t.cpu_us = rng.uniform(1, 100);
    if (fpga_nodes > 0 && rng.bernoulli(0.5)) {
      t.request = Variant::fpga;
      t.fpga_us = rng.uniform(1, 50);
      t.vfs = static_cast<int>(rng.between(1, max_vfs));
      bool two_fpga = vf_counts.size() >= 2 && vf_counts[1] >= t.vfs;
      if (!survivable || two_fpga) {
        if (rng.bernoulli(0.5)) t.cpu_us.reset();
      }
    }
    int n_inputs = static_cast<int>(rng.between(0, std::min(i, 3)));
    std::set<std::size_t> from;
    for (int k = 0; k < n_inputs; ++k) from.insert(rng.below(static_cast<std::uint64_t>(i)));
    for (std::size_t p : from) t.inputs.push_back({p, rng.bernoulli(0.2) ? 0.0 : rng.uniform(0, 5000)});
    s.graph.tasks.push_back(t);
  }
  return s;
}

}  // namespace basecamp::testing
