#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "basecamp/olympus/model.hpp"

namespace basecamp::olympus {

/// Half-open execution interval [start, finish).
struct Interval {
  double start = 0;
  double finish = 0;
};

inline bool overlaps(const Interval& a, const Interval& b) { return a.start < b.finish && b.start < a.finish; }

/// Kernels up to this count are partitioned exactly; larger sets fall back
/// to the greedy allocator.
inline constexpr std::size_t exact_sharing_limit = 12;

namespace detail {

struct SharingSearch {
  const std::vector<std::int64_t>& sizes;
  const std::vector<Interval>& live;
  std::vector<std::size_t> order;  // decreasing size, then index
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::vector<std::size_t>> best;
  std::int64_t best_cost = 0;

  bool fits(const std::vector<std::size_t>& group, std::size_t k) const {
    return std::none_of(group.begin(), group.end(), [&](std::size_t m) { return overlaps(live[m], live[k]); });
  }

  // Members arrive in decreasing size, so joining a group is free and
  // opening one costs the newcomer's size.
  void greedy() {
    groups.clear();
    best_cost = 0;
    for (std::size_t k : order) {
      auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& grp) { return fits(grp, k); });
      if (g != groups.end()) {
        g->push_back(k);
      } else {
        groups.push_back({k});
        best_cost += sizes[k];
      }
    }
    best = groups;
  }

  void branch(std::size_t depth, std::int64_t cost) {
    if (cost >= best_cost) return;
    if (depth == order.size()) {
      best_cost = cost;
      best = groups;
      return;
    }
    std::size_t k = order[depth];
    for (auto& g : groups) {
      if (!fits(g, k)) continue;
      g.push_back(k);
      branch(depth + 1, cost);
      g.pop_back();
    }
    groups.push_back({k});
    branch(depth + 1, cost + sizes[k]);
    groups.pop_back();
  }
};

}  // namespace detail

/// Partitions kernels into buffer-sharing groups whose members run in
/// pairwise disjoint intervals; each group costs its largest member. Returns
/// the index of each kernel's group leader (the largest member; itself when
/// it leads).
inline std::vector<std::size_t> share_buffers(const std::vector<std::int64_t>& sizes, const std::vector<Interval>& live) {
  detail::SharingSearch s{sizes, live, {}, {}, {}, 0};
  s.order.resize(sizes.size());
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  std::stable_sort(s.order.begin(), s.order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
  s.greedy();
  if (sizes.size() <= exact_sharing_limit) {
    s.groups.clear();
    s.branch(0, 0);
  }
  std::vector<std::size_t> leader(sizes.size());
  for (const auto& g : s.best)
    for (std::size_t k : g) leader[k] = g.front();
  return leader;
}

inline std::int64_t shared_total(const std::vector<std::int64_t>& sizes, const std::vector<std::size_t>& leader) {
  std::int64_t total = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k)
    if (leader[k] == k) total += sizes[k];
  return total;
}

/// Fills `shared_with` (the leader's node id) and returns the on-chip bytes
/// left after sharing.
inline std::int64_t share_buffers(std::vector<KernelConfig>& configs, const std::vector<Interval>& live) {
  std::vector<std::int64_t> sizes;
  for (const auto& c : configs) sizes.push_back(c.buffer_bytes);
  auto leader = share_buffers(sizes, live);
  for (std::size_t k = 0; k < configs.size(); ++k)
    configs[k].shared_with = leader[k] == k ? std::nullopt : std::optional<int>(configs[leader[k]].node);
  return shared_total(sizes, leader);
}

}  // namespace basecamp::olympus
