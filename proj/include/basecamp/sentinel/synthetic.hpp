#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "basecamp/random.hpp"

namespace basecamp::sentinel {

struct LabeledSeries {
  std::vector<double> data;
  std::vector<std::size_t> anomalies;  // ascending
};

/// Sinusoid (period 50, amplitude 1) with N(0, 0.1) noise and five spikes of
/// magnitude 4 to 6. Three land in the first 70% and two in the rest, at
/// least 10 samples apart and clear of the first 20.
inline LabeledSeries synthetic_spikes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSeries s;
  s.data.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    s.data[t] = std::sin(2 * std::numbers::pi * static_cast<double>(t) / 50.0) + rng.normal(0.0, 0.1);
  std::size_t split = n * 7 / 10;
  auto pick = [&](std::size_t lo, std::size_t hi, int count) {
    while (count > 0) {
      auto i = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
      bool clear = std::all_of(s.anomalies.begin(), s.anomalies.end(),
                               [&](std::size_t a) { return (a > i ? a - i : i - a) >= 10; });
      if (!clear) continue;
      s.anomalies.push_back(i);
      --count;
    }
  };
  pick(20, split - 1, 3);
  pick(split, n - 1, 2);
  std::sort(s.anomalies.begin(), s.anomalies.end());
  for (std::size_t i : s.anomalies) s.data[i] += (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(4.0, 6.0);
  return s;
}

}  // namespace basecamp::sentinel
