#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/runtime/cluster.hpp"
#include "basecamp/runtime/tasks.hpp"

namespace basecamp::runtime {

struct Placement {
  std::size_t node = 0;
  Variant variant = Variant::cpu;
  double start = 0;
  double finish = 0;
};

struct Schedule {
  std::vector<Placement> tasks;  // by task index
  double makespan = 0;
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Capacity held on a node over [start, end).
struct Usage {
  double start = 0;
  double end = 0;
  int amount = 0;
};

/// Where the data on an edge can be read from. A relay copy can be
/// forwarded to any node from `time` on; a non-relay copy (a transfer still
/// in flight) only serves its own node.
struct Copy {
  std::size_t node = 0;
  double time = 0;
  bool relay = true;
};

/// Input to (re)planning: live nodes, capacity already committed, the tasks
/// still to place, and where the outputs of the others live.
struct PlanningState {
  std::vector<bool> alive;
  double now = 0;
  std::vector<std::vector<Usage>> cores, vfs;  // by node
  std::vector<bool> pending;                   // by task
  std::vector<std::vector<Copy>> copies;       // by edge, for producers not pending

  static PlanningState fresh(const TaskGraph& g, const ClusterSpec& c) {
    PlanningState s;
    s.alive.assign(c.nodes.size(), true);
    s.cores.assign(c.nodes.size(), {});
    s.vfs.assign(c.nodes.size(), {});
    s.pending.assign(g.tasks.size(), true);
    s.copies.assign(edge_base(g).back(), {});
    return s;
  }
};

inline bool supports(const NodeSpec& n, const Task& t, Variant v) {
  if (v == Variant::fpga) return n.kind == NodeKind::fpga && n.vf_count >= t.vfs;
  return n.cores >= t.cores;
}

/// The requested variant while some live node can run it, else the cpu
/// fallback.
inline Variant runnable_variant(const Task& t, const ClusterSpec& c, const std::vector<bool>& alive) {
  auto any = [&](Variant v) {
    for (std::size_t n = 0; n < c.nodes.size(); ++n)
      if (alive[n] && supports(c.nodes[n], t, v)) return true;
    return false;
  };
  if (any(t.request)) return t.request;
  if (t.has_fallback() && any(Variant::cpu)) return Variant::cpu;
  throw ScheduleError("task '" + t.id + "': no live node can satisfy its request");
}

/// Mean transfer time of `bytes` over ordered pairs of distinct live nodes.
inline double mean_transfer(const ClusterSpec& c, const std::vector<bool>& alive, double bytes) {
  double total = 0;
  int pairs = 0;
  for (std::size_t a = 0; a < c.nodes.size(); ++a)
    for (std::size_t b = 0; b < c.nodes.size(); ++b)
      if (a != b && alive[a] && alive[b]) {
        total += transfer_time(c.nodes[a], c.nodes[b], bytes);
        ++pairs;
      }
  return pairs ? total / pairs : 0.0;
}

/// Upward rank: own duration plus the longest mean-cost path to an exit.
inline std::vector<double> upward_ranks(const TaskGraph& g, const ClusterSpec& c, const std::vector<bool>& alive,
                                        const std::vector<Variant>& variant) {
  auto order = topological_order(g);
  auto succ = consumers(g);
  std::vector<double> rank(g.tasks.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    std::size_t t = *it;
    double tail = 0;
    for (std::size_t s : succ[t])
      for (const auto& in : g.tasks[s].inputs)
        if (in.producer == t) tail = std::max(tail, mean_transfer(c, alive, in.bytes) + rank[s]);
    rank[t] = g.tasks[t].duration(variant[t]) + tail;
  }
  return rank;
}

/// Earliest start at or after `ready` where `amount` more units fit under
/// `capacity` for the whole of [start, start + duration).
inline double earliest_start(const std::vector<Usage>& used, int capacity, int amount, double ready, double duration) {
  auto fits = [&](double s) {
    std::vector<double> points{s};
    for (const auto& u : used)
      if (u.start > s && u.start < s + duration) points.push_back(u.start);
    for (double x : points) {
      int load = amount;
      for (const auto& u : used)
        if (u.start <= x && x < u.end) load += u.amount;
      if (load > capacity) return false;
    }
    return true;
  };
  std::vector<double> candidates{ready};
  for (const auto& u : used)
    if (u.end > ready) candidates.push_back(u.end);
  std::sort(candidates.begin(), candidates.end());
  for (double s : candidates)
    if (fits(s)) return s;
  throw std::logic_error("earliest_start: request exceeds node capacity");
}

/// Places every pending task with HEFT: ready tasks in decreasing upward
/// rank, each on the live node with the earliest finish (insertion into
/// capacity gaps, inputs moved at `transfer_time`). Entries for tasks that
/// were not pending are left default.
inline std::vector<Placement> place_pending(const TaskGraph& g, const ClusterSpec& c, PlanningState& st) {
  std::size_t n = g.tasks.size();
  std::vector<Variant> variant(n, Variant::cpu);
  for (std::size_t t = 0; t < n; ++t)
    if (st.pending[t]) variant[t] = runnable_variant(g.tasks[t], c, st.alive);
  auto rank = upward_ranks(g, c, st.alive, variant);

  std::vector<Placement> out(n);
  std::vector<bool> placed(n, false);
  auto base = edge_base(g);
  auto ready_on = [&](std::size_t t, std::size_t m) {
    double ready = st.now;
    for (std::size_t i = 0; i < g.tasks[t].inputs.size(); ++i) {
      const TaskInput& in = g.tasks[t].inputs[i];
      double arrive = std::numeric_limits<double>::infinity();
      if (st.pending[in.producer]) {
        const Placement& p = out[in.producer];
        arrive = p.finish + transfer_time(c.nodes[p.node], c.nodes[m], in.bytes);
      } else {
        for (const auto& cp : st.copies[base[t] + i]) {
          if (cp.relay) {
            arrive = std::min(arrive, cp.time + transfer_time(c.nodes[cp.node], c.nodes[m], in.bytes));
          } else if (cp.node == m) {
            arrive = std::min(arrive, cp.time);
          }
        }
        if (arrive == std::numeric_limits<double>::infinity())
          throw std::logic_error("input of '" + g.tasks[t].id + "' has no live copy");
      }
      ready = std::max(ready, arrive);
    }
    return ready;
  };

  for (;;) {
    std::size_t best = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!st.pending[t] || placed[t]) continue;
      bool ready = std::all_of(g.tasks[t].inputs.begin(), g.tasks[t].inputs.end(),
                               [&](const TaskInput& in) { return !st.pending[in.producer] || placed[in.producer]; });
      if (ready && (best == n || rank[t] > rank[best])) best = t;
    }
    if (best == n) break;
    const Task& task = g.tasks[best];
    Variant v = variant[best];
    double d = task.duration(v);
    Placement choice;
    bool have = false;
    for (std::size_t m = 0; m < c.nodes.size(); ++m) {
      if (!st.alive[m] || !supports(c.nodes[m], task, v)) continue;
      const auto& used = v == Variant::cpu ? st.cores[m] : st.vfs[m];
      int capacity = v == Variant::cpu ? c.nodes[m].cores : c.nodes[m].vf_count;
      double s = earliest_start(used, capacity, task.amount(v), ready_on(best, m), d);
      if (!have || s + d < choice.finish) {
        choice = {m, v, s, s + d};
        have = true;
      }
    }
    auto& used = v == Variant::cpu ? st.cores[choice.node] : st.vfs[choice.node];
    used.push_back({choice.start, choice.finish, task.amount(v)});
    out[best] = choice;
    placed[best] = true;
  }
  return out;
}

/// Static HEFT schedule of the whole graph on a healthy cluster.
inline Schedule schedule(const TaskGraph& g, const ClusterSpec& c) {
  validate(g);
  validate(c);
  check_feasible(g, c);
  PlanningState st = PlanningState::fresh(g, c);
  Schedule s;
  s.tasks = place_pending(g, c, st);
  for (const auto& p : s.tasks) s.makespan = std::max(s.makespan, p.finish);
  return s;
}

inline json to_json(const Schedule& s, const TaskGraph& g, const ClusterSpec& c) {
  json tasks = json::array();
  for (std::size_t t = 0; t < s.tasks.size(); ++t) {
    const Placement& p = s.tasks[t];
    tasks.push_back({{"task", g.tasks[t].id},
                     {"node", c.nodes[p.node].id},
                     {"variant", to_string(p.variant)},
                     {"start", p.start},
                     {"finish", p.finish}});
  }
  return {{"makespan", s.makespan}, {"tasks", tasks}};
}

}  // namespace basecamp::runtime
