#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "basecamp/coord/dfg.hpp"
#include "basecamp/olympus/model.hpp"
#include "basecamp/olympus/platform.hpp"
#include "basecamp/olympus/sharing.hpp"

namespace basecamp::olympus {

enum class Objective { latency, throughput };

inline const char* to_string(Objective o) { return o == Objective::latency ? "latency" : "throughput"; }

inline Objective parse_objective(const std::string& s) {
  if (s == "latency") return Objective::latency;
  if (s == "throughput") return Objective::throughput;
  throw std::invalid_argument("unknown objective '" + s + "' (expected latency or throughput)");
}

struct PlanOptions {
  Objective objective = Objective::latency;
  std::vector<std::int64_t> tile_ladder = default_tile_ladder();
};

class PlanError : public std::runtime_error {
 public:
  PlanError(std::string constraint, const std::string& message)
      : std::runtime_error(message), constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

/// One evaluated configuration of one kernel.
struct Candidate {
  KernelConfig config;
  std::int64_t n_tiles = 1;
  StageTimes stages;
  double makespan = 0;
  double period = 0;
};

struct KernelPlan {
  Candidate chosen;
  std::string callee;
  std::size_t channel = 0;
  KernelCost cost;
  double start = 0;
  double finish = 0;
};

struct ArchitecturePlan {
  std::string platform;
  Objective objective = Objective::latency;
  std::vector<KernelPlan> kernels;  // offloaded nodes, by node id
  std::int64_t onchip_bytes_unshared = 0;
  std::int64_t onchip_bytes = 0;
  int slots_used = 0;
  double makespan = 0;  // critical path of the graph, µs
  double period = 0;    // slowest kernel's invocation period, µs
};

/// Every configuration of one kernel in (R, P, buffering, tile) order.
inline std::vector<Candidate> kernel_candidates(const KernelCost& cost, const PlatformSpec& p, std::size_t channel,
                                                int replication_floor, const std::vector<std::int64_t>& ladder) {
  int lanes = packed_lane_count(transfer_channel(p, channel).width, cost.format);
  std::vector<Candidate> out;
  for (int r = std::max(1, replication_floor); r <= p.compute_slots; ++r)
    for (int pk = 1; pk <= lanes; ++pk)
      for (bool db : {false, true})
        for (std::int64_t tile : ladder) {
          Candidate c;
          c.n_tiles = tile_count(cost, tile);
          TileWork w = tile_work(cost, c.n_tiles);
          c.config = {-1, r, pk, db, tile, buffer_bytes(w, db), std::nullopt};
          c.stages = stage_times(w, c.config, p, cost.format, channel);
          c.makespan = pipeline_makespan(c.stages, c.n_tiles, db);
          c.period = pipeline_period(c.stages, c.n_tiles, db);
          out.push_back(c);
        }
  return out;
}

/// Drops candidates that another candidate matches or beats on every
/// quantity the objective and its tie-breaks are monotone in (the period only
/// matters for throughput). Among exact duplicates the earliest, and so
/// lexicographically smallest, configuration is kept. The survivors are
/// ordered by the objective's own measure so good plans are met early.
inline std::vector<Candidate> pareto_front(const std::vector<Candidate>& all, Objective objective) {
  bool use_period = objective == Objective::throughput;
  auto dominates = [&](const Candidate& a, const Candidate& b) {
    return a.makespan <= b.makespan && (!use_period || a.period <= b.period) &&
           a.config.buffer_bytes <= b.config.buffer_bytes && a.config.replication <= b.config.replication &&
           a.config.packing <= b.config.packing;
  };
  // Visit in ascending order of every key (then position): a dominator is
  // always visited before what it dominates, so comparing with the kept set
  // is enough.
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    const Candidate& c = all[i];
    return std::make_tuple(c.makespan, use_period ? c.period : 0.0, c.config.buffer_bytes, c.config.replication,
                           c.config.packing, i);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<Candidate> out;
  for (std::size_t i : order) {
    const Candidate& c = all[i];
    if (std::none_of(out.begin(), out.end(), [&](const Candidate& kept) { return dominates(kept, c); }))
      out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [&](const Candidate& a, const Candidate& b) {
    return use_period ? a.period < b.period : a.makespan < b.makespan;
  });
  return out;
}

/// Kahn order over the DFG, smallest ready id first.
inline std::vector<int> stable_topological_order(const coord::DataflowGraph& g) {
  std::vector<int> indegree(g.nodes.size(), 0);
  std::vector<std::vector<int>> succ(g.nodes.size());
  for (const auto& e : g.edges)
    if (e.from.node >= 0 && e.to.node >= 0) {
      ++indegree[static_cast<std::size_t>(e.to.node)];
      succ[static_cast<std::size_t>(e.from.node)].push_back(e.to.node);
    }
  std::vector<int> ready, order;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (indegree[i] == 0) ready.push_back(static_cast<int>(i));
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    int n = *it;
    ready.erase(it);
    order.push_back(n);
    for (int s : succ[static_cast<std::size_t>(n)])
      if (--indegree[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
  }
  if (order.size() != g.nodes.size()) throw PlanError("graph", "dataflow graph has a cycle");
  return order;
}

/// As-soon-as-possible start times. Software and clone nodes take no time;
/// `duration` maps node id to a kernel's makespan.
inline std::vector<Interval> asap_intervals(const coord::DataflowGraph& g, const std::vector<int>& topo,
                                            const std::vector<double>& duration) {
  std::vector<Interval> iv(g.nodes.size());
  for (int n : topo) {
    double start = 0;
    for (int pred : g.predecessors(n)) start = std::max(start, iv[static_cast<std::size_t>(pred)].finish);
    iv[static_cast<std::size_t>(n)] = {start, start + duration[static_cast<std::size_t>(n)]};
  }
  return iv;
}

inline double critical_path(const std::vector<Interval>& iv) {
  double m = 0;
  for (const auto& i : iv) m = std::max(m, i.finish);
  return m;
}

/// Total order the planner minimizes: objective, unshared buffer bytes, ΣR,
/// ΣP, Σ kernel makespans. Remaining ties go to the lexicographically
/// smallest configuration list.
struct Score {
  double objective = 0;
  std::int64_t buffer_bytes = 0;
  std::int64_t replication = 0;
  std::int64_t packing = 0;
  double makespan_sum = 0;

  auto key() const { return std::tie(objective, buffer_bytes, replication, packing, makespan_sum); }
  bool operator<(const Score& o) const { return key() < o.key(); }
};

/// Offloaded nodes in id order.
inline std::vector<int> offloaded_nodes(const coord::DataflowGraph& g) {
  std::vector<int> out;
  for (const auto& n : g.nodes)
    if (n.kind == coord::NodeKind::offloaded_kernel) out.push_back(n.id);
  return out;
}

/// Cost metadata embedded in the graph. Missing metadata is an error.
inline std::map<int, KernelCost> costs_from_dfg(const coord::DataflowGraph& g) {
  std::map<int, KernelCost> out;
  for (int id : offloaded_nodes(g)) {
    const auto& n = g.nodes[static_cast<std::size_t>(id)];
    if (!n.cost)
      throw PlanError("cost", "offloaded kernel '" + n.callee + "' (node " + std::to_string(id) +
                                  ") has no cost metadata {macs, bytes_in, bytes_out}");
    try {
      out[id] = kernel_cost_from_json(*n.cost);
    } catch (const std::exception& e) {
      throw PlanError("cost", "malformed cost metadata on node " + std::to_string(id) + ": " + e.what());
    }
  }
  return out;
}

namespace detail {

inline auto config_key(const KernelConfig& c) {
  return std::make_tuple(c.replication, c.packing, c.double_buffered, c.tile_elements);
}

/// Two branch-and-bound passes over the per-kernel fronts. The first finds
/// the best objective value T, visiting fast candidates first. Candidates
/// that cannot reach T even with every other kernel at its fastest are then
/// dropped, and the second pass minimizes the tie-breaks among plans reaching
/// T, visiting small buffers first. Kernels not yet assigned contribute their
/// smallest admissible buffer, R, P and makespan to the bounds.
struct JointSearch {
  JointSearch(const coord::DataflowGraph& graph, const std::vector<int>& order, const std::vector<int>& ks,
              const std::vector<std::vector<Candidate>>& fr, const PlatformSpec& platform, Objective obj)
      : g(graph), topo(order), kernels(ks), fronts(fr), p(platform), objective(obj) {
    std::size_t n = kernels.size();
    duration.assign(g.nodes.size(), 0.0);
    pick.assign(n, 0);
    admissible.assign(n, {});
    for (std::size_t k = 0; k < n; ++k) {
      admissible[k].assign(fronts[k].size(), true);
      double mm = std::numeric_limits<double>::infinity(), mp = mm;
      for (const auto& c : fronts[k]) {
        mm = std::min(mm, c.makespan);
        mp = std::min(mp, c.period);
      }
      min_makespan.push_back(mm);
      min_period.push_back(mp);
    }
    // The first pass only needs the objective and feasibility, so packing and
    // the other tie-break quantities are projected away.
    for (std::size_t k = 0; k < n; ++k) {
      auto measure = [&](std::size_t c) {
        return objective == Objective::latency ? fronts[k][c].makespan : fronts[k][c].period;
      };
      std::vector<std::size_t> order(fronts[k].size());
      for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
      auto key = [&](std::size_t c) {
        return std::make_tuple(measure(c), fronts[k][c].config.buffer_bytes, fronts[k][c].config.replication);
      };
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
      std::vector<std::size_t> kept;
      for (std::size_t c : order) {
        bool dominated = std::any_of(kept.begin(), kept.end(), [&](std::size_t d) {
          return measure(d) <= measure(c) && fronts[k][d].config.buffer_bytes <= fronts[k][c].config.buffer_bytes &&
                 fronts[k][d].config.replication <= fronts[k][c].config.replication;
        });
        if (!dominated) kept.push_back(c);
      }
      coarse.push_back(std::move(kept));
    }
    successors.assign(g.nodes.size(), {});
    for (const auto& e : g.edges)
      if (e.from.node >= 0 && e.to.node >= 0)
        successors[static_cast<std::size_t>(e.from.node)].push_back(e.to.node);
    update_rest();
  }

  const coord::DataflowGraph& g;
  const std::vector<int>& topo;
  const std::vector<int>& kernels;
  const std::vector<std::vector<Candidate>>& fronts;
  const PlatformSpec& p;
  Objective objective;

  std::vector<double> duration;  // by node id
  std::vector<double> min_makespan, min_period;
  std::vector<std::vector<int>> successors;
  std::vector<std::vector<bool>> admissible;
  // Sums of per-kernel minima over kernels k.. (suffixes), admissible only.
  std::vector<std::int64_t> rest_buffer, rest_slots, rest_packing;
  std::vector<double> rest_makespan;
  // rest_fit[k][s]: least buffer bytes kernels k.. need within s compute slots.
  std::vector<std::vector<std::int64_t>> rest_fit;
  // Best makespan / period per kernel using at most r replicas, and the least R.
  std::vector<std::vector<double>> cap_makespan, cap_period;
  std::vector<std::int64_t> min_replication;
  std::vector<std::vector<std::size_t>> visit;  // per-kernel candidate order
  std::vector<std::vector<std::size_t>> coarse;  // Pareto in (measure, buffer, R) only
  std::vector<std::size_t> pick, best_pick;
  bool found = false;
  Score best;

  void update_rest() {
    std::size_t n = kernels.size();
    rest_buffer.assign(n + 1, 0);
    rest_slots.assign(n + 1, 0);
    rest_packing.assign(n + 1, 0);
    rest_makespan.assign(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) {
      std::int64_t mb = std::numeric_limits<std::int64_t>::max() / 4, mr = mb, mpk = mb;
      double mm = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < fronts[k].size(); ++c) {
        if (!admissible[k][c]) continue;
        mb = std::min(mb, fronts[k][c].config.buffer_bytes);
        mr = std::min<std::int64_t>(mr, fronts[k][c].config.replication);
        mpk = std::min<std::int64_t>(mpk, fronts[k][c].config.packing);
        mm = std::min(mm, fronts[k][c].makespan);
      }
      rest_buffer[k] = rest_buffer[k + 1] + mb;
      rest_slots[k] = rest_slots[k + 1] + mr;
      rest_packing[k] = rest_packing[k + 1] + mpk;
      rest_makespan[k] = rest_makespan[k + 1] + mm;
    }
    const std::int64_t none = std::numeric_limits<std::int64_t>::max() / 4;
    auto slots = static_cast<std::size_t>(p.compute_slots);
    const double inf = std::numeric_limits<double>::infinity();
    cap_makespan.assign(n, std::vector<double>(slots + 1, inf));
    cap_period.assign(n, std::vector<double>(slots + 1, inf));
    min_replication.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t c = 0; c < fronts[k].size(); ++c) {
        if (!admissible[k][c]) continue;
        auto r = static_cast<std::size_t>(fronts[k][c].config.replication);
        if (r > slots) continue;
        cap_makespan[k][r] = std::min(cap_makespan[k][r], fronts[k][c].makespan);
        cap_period[k][r] = std::min(cap_period[k][r], fronts[k][c].period);
      }
      for (std::size_t r = 1; r <= slots; ++r) {
        cap_makespan[k][r] = std::min(cap_makespan[k][r], cap_makespan[k][r - 1]);
        cap_period[k][r] = std::min(cap_period[k][r], cap_period[k][r - 1]);
      }
      min_replication[k] = rest_slots[k] - rest_slots[k + 1];
    }
    rest_fit.assign(n + 1, std::vector<std::int64_t>(slots + 1, none));
    std::fill(rest_fit[n].begin(), rest_fit[n].end(), 0);
    for (std::size_t k = n; k-- > 0;)
      for (std::size_t c = 0; c < fronts[k].size(); ++c) {
        if (!admissible[k][c]) continue;
        auto r = static_cast<std::size_t>(fronts[k][c].config.replication);
        for (std::size_t s = r; s <= slots; ++s)
          rest_fit[k][s] = std::min(rest_fit[k][s], fronts[k][c].config.buffer_bytes + rest_fit[k + 1][s - r]);
      }
  }

  // The test is relaxed by a relative 1e-9 so rounding differences never
  // exclude a true optimum.
  void tighten(double target) {
    std::size_t n = kernels.size();
    double limit = target * (1 + 1e-9);
    if (objective == Objective::throughput) {
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t c = 0; c < fronts[k].size(); ++c)
          admissible[k][c] = admissible[k][c] && fronts[k][c].period <= limit;
    } else {
      for (std::size_t k = 0; k < n; ++k) duration[static_cast<std::size_t>(kernels[k])] = min_makespan[k];
      auto head = asap_intervals(g, topo, duration);
      std::vector<double> tail(g.nodes.size(), 0.0);  // longest path after a node finishes
      for (auto it = topo.rbegin(); it != topo.rend(); ++it)
        for (int s : successors[static_cast<std::size_t>(*it)])
          tail[static_cast<std::size_t>(*it)] =
              std::max(tail[static_cast<std::size_t>(*it)], duration[static_cast<std::size_t>(s)] + tail[static_cast<std::size_t>(s)]);
      for (std::size_t k = 0; k < n; ++k) {
        auto node = static_cast<std::size_t>(kernels[k]);
        for (std::size_t c = 0; c < fronts[k].size(); ++c)
          admissible[k][c] = admissible[k][c] && head[node].start + fronts[k][c].makespan + tail[node] <= limit;
      }
    }
    update_rest();
  }

  // Unassigned kernels may each take the slots the others leave at their
  // minimum replication. Callers reject over-budget states first.
  double objective_value(std::size_t assigned, std::int64_t slots) {
    std::int64_t spare = p.compute_slots - slots - rest_slots[assigned];
    auto cap = [&](std::size_t k) { return static_cast<std::size_t>(min_replication[k] + spare); };
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      const auto idx = static_cast<std::size_t>(kernels[k]);
      duration[idx] = k < assigned ? fronts[k][pick[k]].makespan : cap_makespan[k][cap(k)];
    }
    if (objective == Objective::latency) return critical_path(asap_intervals(g, topo, duration));
    double m = 0;
    for (std::size_t k = 0; k < kernels.size(); ++k)
      m = std::max(m, k < assigned ? fronts[k][pick[k]].period : cap_period[k][cap(k)]);
    return m;
  }

  bool lex_less(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) const {
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      auto ka = config_key(fronts[k][a[k]].config), kb = config_key(fronts[k][b[k]].config);
      if (ka != kb) return ka < kb;
    }
    return false;
  }

  bool over_budget(std::size_t k, std::int64_t buffer, std::int64_t slots) const {
    if (slots + rest_slots[k] > p.compute_slots) return true;
    return buffer + rest_fit[k][static_cast<std::size_t>(p.compute_slots - slots)] > p.onchip_memory;
  }

  void best_objective(std::size_t k, std::int64_t buffer, std::int64_t slots) {
    if (over_budget(k, buffer, slots)) return;
    double bound = objective_value(k, slots);
    if (found && bound >= best.objective) return;
    if (k == kernels.size()) {
      found = true;
      best.objective = bound;
      return;
    }
    for (std::size_t c : coarse[k]) {
      const KernelConfig& cfg = fronts[k][c].config;
      pick[k] = c;
      best_objective(k + 1, buffer + cfg.buffer_bytes, slots + cfg.replication);
    }
  }

  void best_ties(std::size_t k, std::int64_t buffer, std::int64_t slots, std::int64_t packing, double makespans,
                 double target, bool& have) {
    if (over_budget(k, buffer, slots)) return;
    if (objective_value(k, slots) > target) return;
    if (have) {
      auto bound = std::make_tuple(buffer + rest_buffer[k], slots + rest_slots[k], packing + rest_packing[k]);
      auto incumbent = std::make_tuple(best.buffer_bytes, best.replication, best.packing);
      if (incumbent < bound) return;
      if (incumbent == bound && makespans + rest_makespan[k] > best.makespan_sum * (1 + 1e-9)) return;
    }
    if (k == kernels.size()) {
      Score s{objective_value(k, slots), buffer, slots, packing, makespans};
      if (!have || s < best || (!(best < s) && lex_less(pick, best_pick))) {
        have = true;
        best = s;
        best_pick = pick;
      }
      return;
    }
    for (std::size_t c : visit[k]) {
      const Candidate& cand = fronts[k][c];
      pick[k] = c;
      best_ties(k + 1, buffer + cand.config.buffer_bytes, slots + cand.config.replication,
                packing + cand.config.packing, makespans + cand.makespan, target, have);
    }
  }

  /// Returns false when no joint configuration fits the budgets.
  bool run() {
    best_objective(0, 0, 0);
    if (!found) return false;
    double target = best.objective;
    tighten(target);
    visit.assign(kernels.size(), {});
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      for (std::size_t c = 0; c < fronts[k].size(); ++c)
        if (admissible[k][c]) visit[k].push_back(c);
      auto key = [&](std::size_t c) {
        const Candidate& x = fronts[k][c];
        return std::make_tuple(x.config.buffer_bytes, x.config.replication, x.config.packing, x.makespan,
                               config_key(x.config));
      };
      std::sort(visit[k].begin(), visit[k].end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    }
    bool have = false;
    best_ties(0, 0, 0, 0, 0.0, target, have);
    return have;
  }
};

}  // namespace detail

/// Searches every (R, P, buffering, tile) choice for each offloaded kernel and
/// returns the joint choice minimizing the objective under the on-chip
/// memory (checked before sharing) and compute-slot budgets. Coordination
/// multiplicity hints set each kernel's replication floor.
inline ArchitecturePlan plan(const coord::DataflowGraph& g, const std::map<int, KernelCost>& costs,
                             const PlatformSpec& p, const PlanOptions& opt = {}) {
  validate(p);
  std::vector<int> topo = stable_topological_order(g);
  std::vector<int> kernels = offloaded_nodes(g);

  std::vector<std::vector<Candidate>> fronts;
  std::vector<std::size_t> channels;
  std::int64_t min_buffer_total = 0, min_slots_total = 0;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const coord::DfgNode& node = g.nodes[static_cast<std::size_t>(kernels[k])];
    auto it = costs.find(node.id);
    if (it == costs.end())
      throw PlanError("cost", "offloaded kernel '" + node.callee + "' (node " + std::to_string(node.id) +
                                  ") has no cost report");
    int floor = 1;
    for (auto m : node.multiplicity) floor = std::max<int>(floor, static_cast<int>(m));
    std::string who = "kernel '" + node.callee + "' (node " + std::to_string(node.id) + ")";
    if (floor > p.compute_slots)
      throw PlanError("compute_slots", who + " needs replication >= " + std::to_string(floor) + ", platform has " +
                                           std::to_string(p.compute_slots) + " compute slots");
    std::vector<Candidate> all;
    try {
      all = kernel_candidates(it->second, p, k, floor, opt.tile_ladder);
    } catch (const std::invalid_argument& e) {
      throw PlanError("memory_channels", who + ": " + e.what());
    }
    std::vector<Candidate> fitting;
    std::int64_t smallest = std::numeric_limits<std::int64_t>::max();
    for (auto& c : all) {
      c.config.node = node.id;
      smallest = std::min(smallest, c.config.buffer_bytes);
      if (c.config.buffer_bytes <= p.onchip_memory) fitting.push_back(c);
    }
    if (fitting.empty())
      throw PlanError("onchip_memory", who + " needs at least " + std::to_string(smallest) +
                                           " bytes of tile buffers, platform has " + std::to_string(p.onchip_memory));
    fronts.push_back(pareto_front(fitting, opt.objective));
    channels.push_back(k % p.channels.size());
    min_buffer_total += smallest;
    min_slots_total += floor;
  }
  if (min_slots_total > p.compute_slots)
    throw PlanError("compute_slots", "kernels need at least " + std::to_string(min_slots_total) +
                                         " compute slots together, platform has " + std::to_string(p.compute_slots));
  if (min_buffer_total > p.onchip_memory)
    throw PlanError("onchip_memory", "kernels need at least " + std::to_string(min_buffer_total) +
                                         " bytes of tile buffers together, platform has " +
                                         std::to_string(p.onchip_memory));

  detail::JointSearch search(g, topo, kernels, fronts, p, opt.objective);
  if (!search.run())
    throw PlanError("onchip_memory+compute_slots",
                    "no joint configuration fits both the on-chip memory and the compute-slot budget");

  ArchitecturePlan out;
  out.platform = p.name;
  out.objective = opt.objective;
  std::vector<double> duration(g.nodes.size(), 0.0);
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    KernelPlan kp;
    kp.chosen = fronts[k][search.best_pick[k]];
    kp.callee = g.nodes[static_cast<std::size_t>(kernels[k])].callee;
    kp.channel = channels[k];
    kp.cost = costs.at(kernels[k]);
    duration[static_cast<std::size_t>(kernels[k])] = kp.chosen.makespan;
    out.onchip_bytes_unshared += kp.chosen.config.buffer_bytes;
    out.slots_used += kp.chosen.config.replication;
    out.period = std::max(out.period, kp.chosen.period);
    out.kernels.push_back(kp);
  }
  auto iv = asap_intervals(g, topo, duration);
  out.makespan = critical_path(iv);

  std::vector<KernelConfig> configs;
  std::vector<Interval> live;
  for (auto& kp : out.kernels) {
    const Interval& i = iv[static_cast<std::size_t>(kp.chosen.config.node)];
    kp.start = i.start;
    kp.finish = i.finish;
    configs.push_back(kp.chosen.config);
    live.push_back(i);
  }
  out.onchip_bytes = share_buffers(configs, live);
  for (std::size_t k = 0; k < configs.size(); ++k) out.kernels[k].chosen.config = configs[k];
  return out;
}

inline ArchitecturePlan plan(const coord::DataflowGraph& g, const PlatformSpec& p, const PlanOptions& opt = {}) {
  return plan(g, costs_from_dfg(g), p, opt);
}

inline json to_json(const StageTimes& s) { return {{"read", s.read}, {"execute", s.execute}, {"write", s.write}}; }

inline json to_json(const ArchitecturePlan& a) {
  json kernels = json::array();
  for (const auto& k : a.kernels) {
    const KernelConfig& c = k.chosen.config;
    kernels.push_back({{"node", c.node},
                       {"callee", k.callee},
                       {"channel", k.channel},
                       {"replication", c.replication},
                       {"packing", c.packing},
                       {"double_buffered", c.double_buffered},
                       {"tile_elements", c.tile_elements},
                       {"n_tiles", k.chosen.n_tiles},
                       {"buffer_bytes", c.buffer_bytes},
                       {"shared_with", c.shared_with ? json(*c.shared_with) : json()},
                       {"stage_times", to_json(k.chosen.stages)},
                       {"makespan", k.chosen.makespan},
                       {"period", k.chosen.period},
                       {"start", k.start},
                       {"finish", k.finish},
                       {"cost", to_json(k.cost)}});
  }
  return {{"platform", a.platform},
          {"objective", to_string(a.objective)},
          {"kernels", kernels},
          {"onchip_bytes_unshared", a.onchip_bytes_unshared},
          {"onchip_bytes", a.onchip_bytes},
          {"slots_used", a.slots_used},
          {"makespan", a.makespan},
          {"period", a.period}};
}

}  // namespace basecamp::olympus
