#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "basecamp/runtime/scheduler.hpp"
#include "basecamp/runtime/simulator.hpp"

namespace basecamp::runtime {

using SchedulingPolicy = std::function<Schedule(const TaskGraph&, const ClusterSpec&)>;

/// Graph-submission front end. Every call takes one lock, so submissions and
/// queries from several threads are applied one at a time in arrival order.
class ResourceManager {
 public:
  explicit ResourceManager(ClusterSpec cluster, SchedulingPolicy policy = schedule)
      : cluster_(std::move(cluster)), policy_(std::move(policy)) {
    validate(cluster_);
  }

  std::size_t submit(Task t, const std::vector<std::pair<std::string, double>>& deps = {}) {
    std::lock_guard lock(mutex_);
    std::size_t id = graph_.submit(std::move(t), deps);
    try {
      validate(graph_);
    } catch (...) {
      graph_.tasks.pop_back();
      throw;
    }
    return id;
  }

  /// Schedules and simulates everything submitted so far.
  SimTrace run(std::uint64_t seed, const SimOptions& opt = {}) {
    std::lock_guard lock(mutex_);
    Schedule s = policy_(graph_, cluster_);
    last_ = simulate(graph_, cluster_, s, seed, opt);
    return *last_;
  }

  /// Availability at `time` in the latest run, or of the idle cluster.
  ResourceReport query(double time) const {
    std::lock_guard lock(mutex_);
    if (last_) return query_resources(cluster_, *last_, graph_, time);
    return query_resources(cluster_, time);
  }

  TaskGraph graph() const {
    std::lock_guard lock(mutex_);
    return graph_;
  }

 private:
  mutable std::mutex mutex_;
  ClusterSpec cluster_;
  SchedulingPolicy policy_;
  TaskGraph graph_;
  std::optional<SimTrace> last_;
};

}  // namespace basecamp::runtime
