#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/random.hpp"
#include "basecamp/runtime/simulator.hpp"
#include "basecamp/runtime/tasks.hpp"

namespace basecamp::runtime {

class TuneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricStats {
  std::optional<double> ema;  // runtime µs; empty until the first observation
  int count = 0;
};

/// Knob space with one runtime average per configuration. Configurations are
/// the cartesian product of knob values, first knob varying slowest.
struct TuningState {
  std::vector<Knob> knobs;
  std::vector<Configuration> configs;
  std::vector<MetricStats> stats;
  double epsilon = 0.1;
  double alpha = 0.2;
  std::string signature;  // environment seen by the latest selection

  std::size_t index_of(const Configuration& c) const {
    for (std::size_t i = 0; i < configs.size(); ++i)
      if (configs[i] == c) return i;
    throw TuneError("configuration is not in the knob space");
  }
};

inline TuningState make_tuning_state(const std::vector<Knob>& knobs, double epsilon = 0.1, double alpha = 0.2) {
  if (!(epsilon >= 0 && epsilon <= 1)) throw TuneError("epsilon must lie in [0, 1]");
  if (!(alpha > 0 && alpha <= 1)) throw TuneError("alpha must lie in (0, 1]");
  TuningState s;
  s.knobs = knobs;
  s.epsilon = epsilon;
  s.alpha = alpha;
  s.configs.push_back({});
  for (const auto& k : knobs) {
    if (k.values.empty()) throw TuneError("knob '" + k.name + "' has no values");
    std::vector<Configuration> next;
    for (const auto& c : s.configs)
      for (const auto& v : k.values) {
        Configuration x = c;
        x[k.name] = v;
        next.push_back(std::move(x));
      }
    s.configs = std::move(next);
  }
  s.stats.assign(s.configs.size(), {});
  return s;
}

/// An fpga variant needs `replication` free VFs (1 without that knob) on a
/// single live node; anything else needs one free core.
inline bool feasible(const Configuration& c, const ResourceReport& env) {
  auto variant = c.find("variant");
  if (variant != c.end() && variant->second == "fpga") {
    int need = 1;
    if (auto r = c.find("replication"); r != c.end()) need = std::stoi(r->second);
    return std::any_of(env.nodes.begin(), env.nodes.end(), [&](const NodeAvailability& n) { return n.free_vfs >= need; });
  }
  return std::any_of(env.nodes.begin(), env.nodes.end(), [](const NodeAvailability& n) { return n.free_cores >= 1; });
}

/// Epsilon-greedy choice among feasible configurations. Exploitation takes
/// an untried configuration first, then the lowest average, ties to the
/// earlier configuration. One uniform draw decides the branch and one more
/// picks the random configuration when exploring.
inline Configuration autotune_select(TuningState& s, const ResourceReport& env, Rng& rng) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < s.configs.size(); ++i)
    if (feasible(s.configs[i], env)) ok.push_back(i);
  if (ok.empty()) throw TuneError("no configuration is feasible in environment " + env.signature());
  s.signature = env.signature();
  if (rng.uniform() < s.epsilon) return s.configs[ok[rng.below(ok.size())]];
  std::size_t best = ok.front();
  for (std::size_t i : ok) {
    const auto& a = s.stats[i];
    const auto& b = s.stats[best];
    if (!b.ema) break;
    if (!a.ema || *a.ema < *b.ema) best = i;
  }
  return s.configs[best];
}

inline void autotune_observe(TuningState& s, const Configuration& c, double value) {
  MetricStats& m = s.stats[s.index_of(c)];
  m.ema = m.ema ? *m.ema + s.alpha * (value - *m.ema) : value;
  ++m.count;
}

/// The configuration with the lowest average among those observed.
inline std::optional<Configuration> best_configuration(const TuningState& s) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < s.configs.size(); ++i)
    if (s.stats[i].ema && (!best || *s.stats[i].ema < *s.stats[*best].ema)) best = i;
  if (!best) return std::nullopt;
  return s.configs[*best];
}

inline json to_json(const Configuration& c) {
  json j = json::object();
  for (const auto& [k, v] : c) j[k] = v;
  return j;
}

inline json to_json(const TuningState& s) {
  json configs = json::array();
  for (std::size_t i = 0; i < s.configs.size(); ++i) {
    json x = {{"configuration", to_json(s.configs[i])}, {"count", s.stats[i].count}};
    x["ema"] = s.stats[i].ema ? json(*s.stats[i].ema) : json(nullptr);
    configs.push_back(x);
  }
  return {{"epsilon", s.epsilon}, {"alpha", s.alpha}, {"signature", s.signature}, {"configurations", configs}};
}

}  // namespace basecamp::runtime
