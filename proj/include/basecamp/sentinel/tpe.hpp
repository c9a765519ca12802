#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "basecamp/random.hpp"

namespace basecamp::sentinel {

using json = nlohmann::ordered_json;

struct Param {
  enum class Type { continuous, integer };
  std::string name;
  Type type = Type::continuous;
  double lo = 0;
  double hi = 1;
  bool log = false;
};

using SearchSpace = std::vector<Param>;

class SearchSpaceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate(const SearchSpace& s) {
  if (s.empty()) throw SearchSpaceError("empty search space");
  for (const auto& p : s) {
    if (!(p.lo <= p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
      throw SearchSpaceError("parameter '" + p.name + "': need finite lo <= hi");
    if (p.log && !(p.type == Param::Type::integer ? p.lo >= 1 : p.lo > 0))
      throw SearchSpaceError("parameter '" + p.name + "': log scale needs lo > 0 (lo >= 1 for integers)");
    if (p.type == Param::Type::integer && (p.lo != std::floor(p.lo) || p.hi != std::floor(p.hi)))
      throw SearchSpaceError("parameter '" + p.name + "': integer bounds must be whole");
  }
}

struct Trial {
  std::vector<double> params;  // in search-space order; integers hold whole values
  double loss = 0;
};

struct TrialHistory {
  SearchSpace space;
  std::vector<Trial> trials;
};

inline bool within(const SearchSpace& s, const std::vector<double>& x) {
  if (x.size() != s.size()) return false;
  for (std::size_t d = 0; d < s.size(); ++d) {
    if (!(x[d] >= s[d].lo && x[d] <= s[d].hi)) return false;
    if (s[d].type == Param::Type::integer && x[d] != std::floor(x[d])) return false;
  }
  return true;
}

inline void append(TrialHistory& h, Trial t) {
  if (!within(h.space, t.params)) throw SearchSpaceError("trial parameters lie outside the search space");
  if (!std::isfinite(t.loss)) throw std::invalid_argument("trial loss must be finite");
  h.trials.push_back(std::move(t));
}

inline constexpr int tpe_startup_trials = 10;
inline constexpr int tpe_candidates = 24;

/// Size of the good set after n trials: min(ceil(sqrt(n) / 4), 25), computed
/// exactly as the least g with 16 g^2 >= n.
inline int tpe_gamma(std::int64_t n) {
  if (n <= 0) return 0;
  auto g = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)) / 4.0);
  while (16 * g * g < n) ++g;
  while (g > 0 && 16 * (g - 1) * (g - 1) >= n) --g;
  return static_cast<int>(std::min<std::int64_t>(g, 25));
}

namespace detail {

// Coordinates the density model works in: log-scaled dimensions in log space.
inline double to_model(const Param& p, double x) { return p.log ? std::log(x) : x; }

// Model-space domain. Integer ranges widen by half a unit each side so the
// end values round from as wide an interval as the inner ones.
inline double model_lo(const Param& p) { return to_model(p, p.type == Param::Type::integer ? p.lo - 0.5 : p.lo); }
inline double model_hi(const Param& p) { return to_model(p, p.type == Param::Type::integer ? p.hi + 0.5 : p.hi); }

inline double from_model(const Param& p, double u) {
  double x = p.log ? std::exp(u) : u;
  if (p.type == Param::Type::integer) x = std::round(x);
  return std::clamp(x, p.lo, p.hi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// One-dimensional Gaussian mixture over [a, b], each kernel truncated to
/// the domain and renormalized. One shared bandwidth: Scott's rule
/// sd * m^(-1/5), kept within [range / min(100, 8m), range] so a good set of
/// one or two points still explores around them.
struct Parzen {
  std::vector<double> centers;
  double bandwidth = 1;
  double a = 0, b = 1;

  Parzen(std::vector<double> points, double lo, double hi) : centers(std::move(points)), a(lo), b(hi) {
    double range = b - a;
    auto m = static_cast<double>(centers.size());
    double mean = std::accumulate(centers.begin(), centers.end(), 0.0) / m;
    double var = 0;
    for (double c : centers) var += (c - mean) * (c - mean);
    double sd = std::sqrt(var / m);
    double scott = sd * std::pow(m, -0.2);
    bandwidth = range > 0 ? std::clamp(scott, range / std::min(100.0, 8 * m), range) : 1.0;
  }

  double log_density(double x) const {
    if (b - a <= 0) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    for (double c : centers) {
      double z = (x - c) / bandwidth;
      double mass = normal_cdf((b - c) / bandwidth) - normal_cdf((a - c) / bandwidth);
      double t = -0.5 * z * z - std::log(bandwidth * std::sqrt(2 * std::numbers::pi) * std::max(mass, 1e-300));
      terms.push_back(t);
      best = std::max(best, t);
    }
    double sum = 0;
    for (double t : terms) sum += std::exp(t - best);
    return best + std::log(sum / static_cast<double>(centers.size()));
  }

  double sample(Rng& rng) const {
    if (b - a <= 0) return a;
    double c = centers[rng.below(centers.size())];
    for (int tries = 0; tries < 64; ++tries) {
      double x = c + bandwidth * rng.normal();
      if (x >= a && x <= b) return x;
    }
    return std::clamp(c, a, b);
  }
};

}  // namespace detail

/// Next point to evaluate. The first ten come uniformly from the space
/// (log-uniform on log dimensions). After that the best gamma(n) trials form
/// the good set, per-dimension Parzen densities l (good) and g (the rest)
/// are built, 24 candidates are drawn from l and the one maximizing l/g is
/// returned.
inline std::vector<double> tpe_suggest(const TrialHistory& h, Rng& rng) {
  validate(h.space);
  const SearchSpace& s = h.space;
  std::size_t dims = s.size();
  std::vector<double> lo(dims), hi(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    lo[d] = detail::model_lo(s[d]);
    hi[d] = detail::model_hi(s[d]);
  }
  std::vector<double> out(dims);
  auto n = static_cast<std::int64_t>(h.trials.size());
  if (n < tpe_startup_trials) {
    for (std::size_t d = 0; d < dims; ++d) out[d] = detail::from_model(s[d], rng.uniform(lo[d], hi[d]));
    return out;
  }
  std::vector<std::size_t> order(h.trials.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return h.trials[a].loss < h.trials[b].loss; });
  auto good_count = static_cast<std::size_t>(tpe_gamma(n));
  std::vector<detail::Parzen> l, g;
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> good, bad;
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < good_count ? good : bad).push_back(detail::to_model(s[d], h.trials[order[i]].params[d]));
    l.emplace_back(std::move(good), lo[d], hi[d]);
    g.emplace_back(std::move(bad), lo[d], hi[d]);
  }
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> candidate(dims);
  for (int c = 0; c < tpe_candidates; ++c) {
    double score = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      candidate[d] = l[d].sample(rng);
      score += l[d].log_density(candidate[d]) - g[d].log_density(candidate[d]);
    }
    if (score > best_score) {
      best_score = score;
      for (std::size_t d = 0; d < dims; ++d) out[d] = detail::from_model(s[d], candidate[d]);
    }
  }
  return out;
}

inline std::vector<double> tpe_suggest(const TrialHistory& h, std::uint64_t seed) {
  Rng rng(seed);
  return tpe_suggest(h, rng);
}

/// Ask/tell front end. Suggestions see a consistent snapshot of the history
/// and appends are serialized, so trials may be evaluated on several threads.
class Study {
 public:
  Study(SearchSpace space, std::uint64_t seed) : rng_(seed) {
    validate(space);
    history_.space = std::move(space);
  }

  std::vector<double> ask() {
    std::lock_guard lock(mutex_);
    return tpe_suggest(history_, rng_);
  }

  void tell(std::vector<double> params, double loss) {
    std::lock_guard lock(mutex_);
    append(history_, {std::move(params), loss});
  }

  TrialHistory history() const {
    std::lock_guard lock(mutex_);
    return history_;
  }

 private:
  mutable std::mutex mutex_;
  Rng rng_;
  TrialHistory history_;
};

}  // namespace basecamp::sentinel
