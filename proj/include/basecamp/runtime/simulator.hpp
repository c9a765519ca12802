#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "basecamp/random.hpp"
#include "basecamp/runtime/cluster.hpp"
#include "basecamp/runtime/scheduler.hpp"
#include "basecamp/runtime/tasks.hpp"
#include "basecamp/runtime/vf.hpp"

namespace basecamp::runtime {

enum class EventKind { task_start, task_end, transfer_start, transfer_end, node_fail, vf_attach, vf_detach, reschedule };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::task_start: return "task-start";
    case EventKind::task_end: return "task-end";
    case EventKind::transfer_start: return "transfer-start";
    case EventKind::transfer_end: return "transfer-end";
    case EventKind::node_fail: return "node-fail";
    case EventKind::vf_attach: return "vf-attach";
    case EventKind::vf_detach: return "vf-detach";
    case EventKind::reschedule: return "reschedule";
  }
  return "?";
}

inline constexpr std::size_t no_index = static_cast<std::size_t>(-1);

/// One trace record. Transfers use `task` for the producer and `node`/`dst`
/// for the endpoints; `amount` is the cores or VFs a task holds.
struct SimEvent {
  double time = 0;
  EventKind kind = EventKind::task_start;
  std::size_t task = no_index;
  std::size_t node = no_index;
  std::size_t dst = no_index;
  std::size_t consumer = no_index;  // transfers: the task the data is for
  Variant variant = Variant::cpu;
  int amount = 0;
  int vf = -1;
  double bytes = 0;
};

inline SimEvent make_event(double time, EventKind kind, std::size_t task, std::size_t node, std::size_t dst = no_index) {
  SimEvent e;
  e.time = time;
  e.kind = kind;
  e.task = task;
  e.node = node;
  e.dst = dst;
  return e;
}

struct SimTrace {
  std::vector<SimEvent> events;
  double makespan = 0;
  std::vector<std::size_t> unfinished;  // tasks no live node could run
};

struct SimOptions {
  // Each run's duration is scaled by a seeded factor in [1 - jitter, 1 + jitter].
  double jitter = 0.0;
};

inline std::string vm_name(const Task& t) { return "vm:" + t.id; }

namespace detail {

class Simulator {
 public:
  Simulator(const TaskGraph& g, const ClusterSpec& c, const Schedule& s, std::uint64_t seed, const SimOptions& o)
      : g_(g), c_(c), opt_(o), rng_(seed), plan_(s.tasks), vfs_(c) {
    std::size_t n = g.tasks.size(), m = c.nodes.size();
    base_ = edge_base(g);
    out_edges_.assign(n, {});
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t i = 0; i < g.tasks[t].inputs.size(); ++i) {
        edges_.push_back({g.tasks[t].inputs[i].producer, t, g.tasks[t].inputs[i].bytes});
        out_edges_[g.tasks[t].inputs[i].producer].push_back(base_[t] + i);
      }
    status_.assign(n, Status::waiting);
    end_.assign(n, 0.0);
    held_.assign(n, {});
    have_.assign(edges_.size(), std::vector<bool>(m, false));
    alive_.assign(m, true);
    used_cores_.assign(m, 0);
    failures_ = c.failures;
    std::stable_sort(failures_.begin(), failures_.end(),
                     [](const ScriptedFailure& a, const ScriptedFailure& b) { return a.time < b.time; });
  }

  SimTrace run() {
    double now = 0;
    for (;;) {
      step(now);
      double next = next_time(now);
      if (next == std::numeric_limits<double>::infinity()) break;
      now = next;
    }
    for (std::size_t t = 0; t < g_.tasks.size(); ++t)
      if (status_[t] != Status::done) trace_.unfinished.push_back(t);
    return std::move(trace_);
  }

 private:
  enum class Status { waiting, running, done, stranded };

  struct Edge {
    std::size_t producer, consumer;
    double bytes;
  };

  struct Transfer {
    std::size_t edge, src, dst;
    double end;
    bool active;
  };

  const TaskGraph& g_;
  const ClusterSpec& c_;
  SimOptions opt_;
  Rng rng_;
  std::vector<Placement> plan_;
  VfRegistry vfs_;
  std::vector<std::size_t> base_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_edges_;
  std::vector<Status> status_;
  std::vector<double> end_;
  std::vector<std::vector<int>> held_;   // VFs per running task
  std::vector<std::vector<bool>> have_;  // [edge][node]: the edge's data is there
  std::vector<bool> alive_;
  std::vector<int> used_cores_;
  std::vector<Transfer> transfers_;
  std::vector<ScriptedFailure> failures_;
  std::size_t next_failure_ = 0;
  SimTrace trace_;

  void emit(SimEvent e) { trace_.events.push_back(e); }

  bool in_flight(std::size_t edge, std::size_t dst) const {
    return std::any_of(transfers_.begin(), transfers_.end(),
                       [&](const Transfer& x) { return x.active && x.edge == edge && x.dst == dst; });
  }

  SimEvent transfer_event(double time, EventKind kind, const Transfer& x) const {
    const Edge& e = edges_[x.edge];
    SimEvent ev = make_event(time, kind, e.producer, x.src, x.dst);
    ev.consumer = e.consumer;
    ev.bytes = e.bytes;
    return ev;
  }

  void start_transfer(std::size_t edge, std::size_t src, std::size_t dst, double now) {
    Transfer x{edge, src, dst, now + transfer_time(c_.nodes[src], c_.nodes[dst], edges_[edge].bytes), true};
    transfers_.push_back(x);
    emit(transfer_event(now, EventKind::transfer_start, x));
  }

  void step(double now) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t t = 0; t < g_.tasks.size(); ++t)
        if (status_[t] == Status::running && end_[t] <= now) {
          finish(t, now);
          changed = true;
        }
      for (auto& x : transfers_)
        if (x.active && x.end <= now) {
          x.active = false;
          have_[x.edge][x.dst] = true;
          emit(transfer_event(x.end, EventKind::transfer_end, x));
          changed = true;
        }
      while (next_failure_ < failures_.size() && failures_[next_failure_].time <= now) {
        fail(c_.index_of(failures_[next_failure_].node), now);
        ++next_failure_;
        changed = true;
      }
      std::vector<std::size_t> ready;
      for (std::size_t t = 0; t < g_.tasks.size(); ++t)
        if (status_[t] == Status::waiting && plan_[t].start <= now) ready.push_back(t);
      std::stable_sort(ready.begin(), ready.end(),
                       [&](std::size_t a, std::size_t b) { return plan_[a].start < plan_[b].start; });
      for (std::size_t t : ready)
        if (can_start(t)) {
          start(t, now);
          changed = true;
        }
    }
  }

  // Waiting tasks whose planned start has passed wake up on the next end or
  // arrival instead.
  double next_time(double now) const {
    double next = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < g_.tasks.size(); ++t) {
      if (status_[t] == Status::running) next = std::min(next, end_[t]);
      if (status_[t] == Status::waiting && plan_[t].start > now) next = std::min(next, plan_[t].start);
    }
    for (const auto& x : transfers_)
      if (x.active) next = std::min(next, x.end);
    if (next_failure_ < failures_.size()) next = std::min(next, failures_[next_failure_].time);
    return next;
  }

  bool can_start(std::size_t t) {
    const Placement& p = plan_[t];
    if (!alive_[p.node]) return false;
    for (std::size_t i = 0; i < g_.tasks[t].inputs.size(); ++i)
      if (!have_[base_[t] + i][p.node]) return false;
    const Task& task = g_.tasks[t];
    if (p.variant == Variant::cpu) return used_cores_[p.node] + task.cores <= c_.nodes[p.node].cores;
    return vfs_.at(c_.nodes[p.node].id).free_count() >= task.vfs;
  }

  void start(std::size_t t, double now) {
    const Placement& p = plan_[t];
    const Task& task = g_.tasks[t];
    double d = task.duration(p.variant);
    if (opt_.jitter > 0) d *= 1.0 + opt_.jitter * (2.0 * rng_.uniform() - 1.0);
    end_[t] = now + d;
    status_[t] = Status::running;
    held_[t].clear();
    if (p.variant == Variant::fpga) {
      for (int i = 0; i < task.vfs; ++i) {
        int vf = vf_attach(vfs_, c_.nodes[p.node].id, vm_name(task));
        held_[t].push_back(vf);
        SimEvent e = make_event(now, EventKind::vf_attach, t, p.node);
        e.vf = vf;
        emit(e);
      }
    } else {
      used_cores_[p.node] += task.cores;
    }
    SimEvent e = make_event(now, EventKind::task_start, t, p.node);
    e.variant = p.variant;
    e.amount = task.amount(p.variant);
    emit(e);
  }

  void finish(std::size_t t, double now) {
    const Placement& p = plan_[t];
    const Task& task = g_.tasks[t];
    status_[t] = Status::done;
    SimEvent e = make_event(end_[t], EventKind::task_end, t, p.node);
    e.variant = p.variant;
    e.amount = task.amount(p.variant);
    emit(e);
    if (p.variant == Variant::fpga) {
      for (int vf : held_[t]) {
        vfs_.at(c_.nodes[p.node].id).detach(vm_name(task), vf);
        SimEvent d = make_event(end_[t], EventKind::vf_detach, t, p.node);
        d.vf = vf;
        emit(d);
      }
      held_[t].clear();
    } else {
      used_cores_[p.node] -= task.cores;
    }
    trace_.makespan = std::max(trace_.makespan, end_[t]);
    // Outputs exist where the task ran and are pushed to each waiting
    // consumer's node right away.
    for (std::size_t edge : out_edges_[t]) {
      have_[edge][p.node] = true;
      std::size_t s = edges_[edge].consumer;
      if (status_[s] != Status::waiting) continue;
      std::size_t dst = plan_[s].node;
      if (!have_[edge][dst] && !in_flight(edge, dst)) start_transfer(edge, p.node, dst, now);
    }
  }

  bool has_live_copy(std::size_t edge) const {
    for (std::size_t n = 0; n < c_.nodes.size(); ++n)
      if (alive_[n] && have_[edge][n]) return true;
    return false;
  }

  void fail(std::size_t node, double now) {
    if (!alive_[node]) return;
    alive_[node] = false;
    emit(make_event(now, EventKind::node_fail, no_index, node));
    std::size_t n = g_.tasks.size();
    std::vector<bool> reset(n, false);
    for (std::size_t t = 0; t < n; ++t)
      if (status_[t] == Status::running && plan_[t].node == node) {
        status_[t] = Status::waiting;
        reset[t] = true;
        held_[t].clear();
      }
    used_cores_[node] = 0;
    for (auto& x : transfers_)
      if (x.active && (x.src == node || x.dst == node)) x.active = false;
    for (auto& h : have_) h[node] = false;

    // Lineage: a lost input of unfinished work is recomputed, which may in
    // turn need lost inputs.
    std::vector<std::size_t> work;
    for (std::size_t t = 0; t < n; ++t)
      if (status_[t] == Status::waiting) work.push_back(t);
    while (!work.empty()) {
      std::size_t t = work.back();
      work.pop_back();
      for (std::size_t i = 0; i < g_.tasks[t].inputs.size(); ++i) {
        std::size_t p = g_.tasks[t].inputs[i].producer;
        if (status_[p] == Status::done && !has_live_copy(base_[t] + i)) {
          status_[p] = Status::waiting;
          reset[p] = true;
          work.push_back(p);
        }
      }
    }
    replan(now, reset);
  }

  void replan(double now, const std::vector<bool>& reset) {
    std::size_t n = g_.tasks.size(), m = c_.nodes.size();
    // Tasks no live node can run are stranded, and so is everything below them.
    for (std::size_t t : topological_order(g_)) {
      if (status_[t] != Status::waiting) continue;
      bool stuck = false;
      try {
        runnable_variant(g_.tasks[t], c_, alive_);
      } catch (const ScheduleError&) {
        stuck = true;
      }
      for (const auto& in : g_.tasks[t].inputs) stuck = stuck || status_[in.producer] == Status::stranded;
      if (stuck) status_[t] = Status::stranded;
    }

    PlanningState st;
    st.alive = alive_;
    st.now = now;
    st.cores.assign(m, {});
    st.vfs.assign(m, {});
    st.pending.assign(n, false);
    st.copies.assign(edges_.size(), {});
    for (std::size_t t = 0; t < n; ++t) {
      const Placement& p = plan_[t];
      if (status_[t] == Status::waiting) st.pending[t] = true;
      if (status_[t] == Status::running)
        (p.variant == Variant::cpu ? st.cores : st.vfs)[p.node].push_back({now, end_[t], g_.tasks[t].amount(p.variant)});
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      std::size_t p = edges_[e].producer;
      if (status_[p] == Status::running) st.copies[e].push_back({plan_[p].node, end_[p], true});
      if (status_[p] == Status::done)
        for (std::size_t k = 0; k < m; ++k)
          if (alive_[k] && have_[e][k]) st.copies[e].push_back({k, now, true});
    }
    for (const auto& x : transfers_)
      if (x.active) st.copies[x.edge].push_back({x.dst, x.end, false});

    std::vector<Placement> fresh = place_pending(g_, c_, st);
    for (std::size_t t = 0; t < n; ++t) {
      if (!st.pending[t]) continue;
      bool moved = fresh[t].node != plan_[t].node || fresh[t].variant != plan_[t].variant;
      plan_[t] = fresh[t];
      if (moved || reset[t]) {
        SimEvent e = make_event(now, EventKind::reschedule, t, fresh[t].node);
        e.variant = fresh[t].variant;
        emit(e);
      }
    }
    // Pull inputs that already exist somewhere, from wherever they arrive
    // first; a transfer already on its way wins ties.
    for (std::size_t t = 0; t < n; ++t) {
      if (!st.pending[t]) continue;
      std::size_t dst = plan_[t].node;
      for (std::size_t i = 0; i < g_.tasks[t].inputs.size(); ++i) {
        std::size_t e = base_[t] + i;
        if (status_[edges_[e].producer] != Status::done || have_[e][dst]) continue;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& x : transfers_)
          if (x.active && x.edge == e && x.dst == dst) best = std::min(best, x.end);
        std::size_t src = no_index;
        for (std::size_t k = 0; k < m; ++k) {
          if (!alive_[k] || !have_[e][k]) continue;
          double arrive = now + transfer_time(c_.nodes[k], c_.nodes[dst], edges_[e].bytes);
          if (arrive < best) {
            best = arrive;
            src = k;
          }
        }
        if (src != no_index) start_transfer(e, src, dst, now);
      }
    }
  }
};

}  // namespace detail

/// Executes a schedule event by event. Without failures every task starts at
/// its planned time. A scripted node failure aborts the node's running
/// tasks, drops the data it held, marks lost outputs that are still needed
/// for recomputation, and re-places all unfinished work with HEFT from the
/// failure time on.
inline SimTrace simulate(const TaskGraph& g, const ClusterSpec& c, const Schedule& s, std::uint64_t seed,
                         const SimOptions& opt = {}) {
  if (s.tasks.size() != g.tasks.size()) throw ScheduleError("schedule does not cover the task graph");
  return detail::Simulator(g, c, s, seed, opt).run();
}

inline json to_json(const SimEvent& e, const TaskGraph& g, const ClusterSpec& c) {
  json j = {{"time", e.time}, {"kind", to_string(e.kind)}};
  switch (e.kind) {
    case EventKind::task_start:
    case EventKind::task_end:
      j["task"] = g.tasks[e.task].id;
      j["node"] = c.nodes[e.node].id;
      j["variant"] = to_string(e.variant);
      j[e.variant == Variant::cpu ? "cores" : "vfs"] = e.amount;
      break;
    case EventKind::transfer_start:
    case EventKind::transfer_end:
      j["task"] = g.tasks[e.task].id;
      j["for"] = g.tasks[e.consumer].id;
      j["src"] = c.nodes[e.node].id;
      j["dst"] = c.nodes[e.dst].id;
      j["bytes"] = e.bytes;
      break;
    case EventKind::node_fail:
      j["node"] = c.nodes[e.node].id;
      break;
    case EventKind::vf_attach:
    case EventKind::vf_detach:
      j["node"] = c.nodes[e.node].id;
      j["vf"] = e.vf;
      j["vm"] = vm_name(g.tasks[e.task]);
      break;
    case EventKind::reschedule:
      j["task"] = g.tasks[e.task].id;
      j["node"] = c.nodes[e.node].id;
      j["variant"] = to_string(e.variant);
      break;
  }
  return j;
}

/// One JSON object per event, then a summary line with the makespan.
inline std::string to_jsonl(const SimTrace& t, const TaskGraph& g, const ClusterSpec& c) {
  std::string out;
  for (const auto& e : t.events) out += to_json(e, g, c).dump() + "\n";
  json unfinished = json::array();
  for (std::size_t k : t.unfinished) unfinished.push_back(g.tasks[k].id);
  out += json{{"makespan", t.makespan}, {"unfinished", unfinished}}.dump() + "\n";
  return out;
}

struct NodeAvailability {
  std::string id;
  NodeKind kind = NodeKind::cpu;
  int cores = 0;
  int free_cores = 0;
  int vf_count = 0;
  int free_vfs = 0;
  std::vector<std::optional<std::string>> vf_owner;  // VM holding each VF
  double utilization = 0;                             // busy share of cores and VFs
};

/// Live nodes only; failed nodes are absent.
struct ResourceReport {
  double time = 0;
  std::vector<NodeAvailability> nodes;

  int free_vfs() const {
    int n = 0;
    for (const auto& x : nodes) n += x.free_vfs;
    return n;
  }
  int free_cores() const {
    int n = 0;
    for (const auto& x : nodes) n += x.free_cores;
    return n;
  }
  /// Live node kinds and counts, e.g. "cpu:2,fpga:1".
  std::string signature() const {
    int cpu = 0, fpga = 0;
    for (const auto& x : nodes) (x.kind == NodeKind::cpu ? cpu : fpga) += 1;
    return "cpu:" + std::to_string(cpu) + ",fpga:" + std::to_string(fpga);
  }
};

namespace detail {

inline ResourceReport build_report(const ClusterSpec& c, const std::vector<bool>& alive, const std::vector<int>& used,
                                   VfRegistry& vfs, double time) {
  ResourceReport r;
  r.time = time;
  for (std::size_t n = 0; n < c.nodes.size(); ++n) {
    if (!alive[n]) continue;
    const NodeSpec& s = c.nodes[n];
    NodeAvailability a;
    a.id = s.id;
    a.kind = s.kind;
    a.cores = s.cores;
    a.free_cores = s.cores - used[n];
    a.vf_count = s.kind == NodeKind::fpga ? s.vf_count : 0;
    if (s.kind == NodeKind::fpga) {
      const VfPool& pool = vfs.at(s.id);
      a.free_vfs = pool.free_count();
      for (int v = 0; v < pool.size(); ++v) a.vf_owner.push_back(pool.owner(v));
    }
    int total = a.cores + a.vf_count;
    a.utilization = total ? static_cast<double>(used[n] + a.vf_count - a.free_vfs) / total : 0.0;
    r.nodes.push_back(a);
  }
  return r;
}

}  // namespace detail

/// Availability of an idle cluster at `time`, after scripted failures up to it.
inline ResourceReport query_resources(const ClusterSpec& c, double time = 0) {
  std::vector<bool> alive(c.nodes.size(), true);
  for (const auto& f : c.failures)
    if (f.time <= time) alive[c.index_of(f.node)] = false;
  VfRegistry vfs(c);
  return detail::build_report(c, alive, std::vector<int>(c.nodes.size(), 0), vfs, time);
}

/// Availability at `time` during a simulated run, replaying every trace
/// event up to and including that instant.
inline ResourceReport query_resources(const ClusterSpec& c, const SimTrace& trace, const TaskGraph& g, double time) {
  std::vector<bool> alive(c.nodes.size(), true);
  std::vector<int> used(c.nodes.size(), 0);
  VfRegistry vfs(c);
  for (const auto& e : trace.events) {
    if (e.time > time) break;
    switch (e.kind) {
      case EventKind::task_start:
        if (e.variant == Variant::cpu) used[e.node] += e.amount;
        break;
      case EventKind::task_end:
        if (e.variant == Variant::cpu) used[e.node] -= e.amount;
        break;
      case EventKind::vf_attach:
        vfs.at(c.nodes[e.node].id).attach(vm_name(g.tasks[e.task]));
        break;
      case EventKind::vf_detach:
        vfs.at(c.nodes[e.node].id).detach(vm_name(g.tasks[e.task]), e.vf);
        break;
      case EventKind::node_fail:
        alive[e.node] = false;
        used[e.node] = 0;
        if (c.nodes[e.node].kind == NodeKind::fpga) vfs.at(c.nodes[e.node].id) = VfPool(c.nodes[e.node].vf_count);
        break;
      default:
        break;
    }
  }
  return detail::build_report(c, alive, used, vfs, time);
}

inline json to_json(const ResourceReport& r) {
  json nodes = json::array();
  for (const auto& a : r.nodes) {
    json owners = json::array();
    for (const auto& o : a.vf_owner) owners.push_back(o ? json(*o) : json(nullptr));
    nodes.push_back({{"id", a.id},
                     {"kind", to_string(a.kind)},
                     {"cores", a.cores},
                     {"free_cores", a.free_cores},
                     {"vf_count", a.vf_count},
                     {"free_vfs", a.free_vfs},
                     {"vfs", owners},
                     {"utilization", a.utilization}});
  }
  return {{"time", r.time}, {"nodes", nodes}};
}

}  // namespace basecamp::runtime
