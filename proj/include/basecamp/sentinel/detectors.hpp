#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace basecamp::sentinel {

using json = nlohmann::ordered_json;

enum class DetectorKind { rolling_zscore, iqr, moving_average_residual };

inline const char* to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::rolling_zscore: return "rolling-zscore";
    case DetectorKind::iqr: return "iqr";
    case DetectorKind::moving_average_residual: return "moving-average-residual";
  }
  return "?";
}

inline DetectorKind parse_detector_kind(const std::string& s) {
  if (s == "rolling-zscore") return DetectorKind::rolling_zscore;
  if (s == "iqr") return DetectorKind::iqr;
  if (s == "moving-average-residual") return DetectorKind::moving_average_residual;
  throw std::invalid_argument("unknown detector kind '" + s + "'");
}

class DetectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double sigma_floor = 1e-12;

/// Detector with its hyperparameters and the statistics of the slice it was
/// last fitted on. `fitted_at` counts the samples seen up to that slice's end.
struct DetectorModel {
  DetectorKind kind = DetectorKind::rolling_zscore;
  int window = 64;         // rolling-zscore and moving-average-residual
  double threshold = 3.0;  // k
  // rolling-zscore: mean/std of the last window; iqr: q1/q3;
  // moving-average-residual: mean of the last window and residual std.
  double center = 0;
  double spread = 0;
  double q1 = 0, q3 = 0;
  std::int64_t fitted_at = 0;

  bool operator==(const DetectorModel&) const = default;
};

inline bool uses_window(DetectorKind k) { return k != DetectorKind::iqr; }

/// Fewest samples fit and detect accept.
inline std::size_t minimum_length(const DetectorModel& m) {
  if (m.kind == DetectorKind::moving_average_residual) return static_cast<std::size_t>(m.window) + 1;
  if (m.kind == DetectorKind::rolling_zscore) return static_cast<std::size_t>(m.window);
  return 1;
}

inline void check_hyperparameters(const DetectorModel& m) {
  if (uses_window(m.kind) && m.window < 2) throw DetectorError("window must be >= 2");
  if (!(m.threshold > 0)) throw DetectorError("threshold must be > 0");
}

namespace detail {

inline double mean_of(const std::vector<double>& x, std::size_t from, std::size_t to) {
  double s = 0;
  for (std::size_t i = from; i < to; ++i) s += x[i];
  return s / static_cast<double>(to - from);
}

// Population standard deviation.
inline double std_of(const std::vector<double>& x, std::size_t from, std::size_t to) {
  double mu = mean_of(x, from, to), s = 0;
  for (std::size_t i = from; i < to; ++i) s += (x[i] - mu) * (x[i] - mu);
  return std::sqrt(s / static_cast<double>(to - from));
}

/// Linear-interpolation quantile of sorted data (position q·(n-1)).
inline double quantile(const std::vector<double>& sorted, double q) {
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Window of w samples ending at t, or the first w while t is too early.
inline std::size_t window_start(std::size_t t, std::size_t w) { return t + 1 >= w ? t + 1 - w : 0; }

// x_t minus the mean of the w samples before it.
inline std::vector<double> residuals(const std::vector<double>& x, std::size_t w) {
  std::vector<double> r;
  for (std::size_t t = w; t < x.size(); ++t) r.push_back(x[t] - mean_of(x, t - w, t));
  return r;
}

}  // namespace detail

/// Fits the statistics on `data` with the model's hyperparameters.
inline DetectorModel fit(DetectorModel m, const std::vector<double>& data, std::int64_t stream_offset = 0) {
  check_hyperparameters(m);
  if (data.size() < minimum_length(m))
    throw DetectorError("need at least " + std::to_string(minimum_length(m)) + " samples to fit " + to_string(m.kind) +
                        ", got " + std::to_string(data.size()));
  auto w = static_cast<std::size_t>(m.window);
  switch (m.kind) {
    case DetectorKind::rolling_zscore:
      m.center = detail::mean_of(data, data.size() - w, data.size());
      m.spread = detail::std_of(data, data.size() - w, data.size());
      break;
    case DetectorKind::iqr: {
      std::vector<double> s = data;
      std::sort(s.begin(), s.end());
      m.q1 = detail::quantile(s, 0.25);
      m.q3 = detail::quantile(s, 0.75);
      m.center = detail::quantile(s, 0.5);
      m.spread = m.q3 - m.q1;
      break;
    }
    case DetectorKind::moving_average_residual: {
      auto r = detail::residuals(data, w);
      m.center = detail::mean_of(data, data.size() - w, data.size());
      m.spread = detail::std_of(r, 0, r.size());
      break;
    }
  }
  m.fitted_at = stream_offset + static_cast<std::int64_t>(data.size());
  return m;
}

/// Sliding refit: statistics recomputed on the trailing `window` of new
/// data, hyperparameters kept.
inline DetectorModel refit(const DetectorModel& m, const std::vector<double>& window) {
  return fit(m, window, m.fitted_at);
}

/// Indexes where the detector fires, ascending.
///  rolling-zscore: |x_t - mean| > k * max(std, 1e-12) over the w samples
///    ending at t (the first w samples for t < w - 1).
///  iqr: x_t outside [q1 - k * IQR, q3 + k * IQR] with the fitted quartiles.
///  moving-average-residual: |x_t - mean of the w samples before t| >
///    k * max(fitted residual std, 1e-12), for t >= w.
inline std::vector<std::size_t> detect_indexes(const DetectorModel& m, const std::vector<double>& data) {
  check_hyperparameters(m);
  if (data.size() < minimum_length(m))
    throw DetectorError("data shorter than the detector's window (" + std::to_string(data.size()) + " < " +
                        std::to_string(minimum_length(m)) + ")");
  std::vector<std::size_t> out;
  auto w = static_cast<std::size_t>(m.window);
  switch (m.kind) {
    case DetectorKind::rolling_zscore:
      for (std::size_t t = 0; t < data.size(); ++t) {
        std::size_t from = detail::window_start(t, w);
        double mu = detail::mean_of(data, from, from + w);
        double sd = std::max(detail::std_of(data, from, from + w), sigma_floor);
        if (std::abs(data[t] - mu) > m.threshold * sd) out.push_back(t);
      }
      break;
    case DetectorKind::iqr: {
      double iqr = m.q3 - m.q1;
      double lo = m.q1 - m.threshold * iqr, hi = m.q3 + m.threshold * iqr;
      for (std::size_t t = 0; t < data.size(); ++t)
        if (data[t] < lo || data[t] > hi) out.push_back(t);
      break;
    }
    case DetectorKind::moving_average_residual: {
      double sd = std::max(m.spread, sigma_floor);
      auto r = detail::residuals(data, w);
      for (std::size_t i = 0; i < r.size(); ++i)
        if (std::abs(r[i]) > m.threshold * sd) out.push_back(i + w);
      break;
    }
  }
  return out;
}

inline json to_json(const DetectorModel& m) {
  json j = {{"kind", to_string(m.kind)}};
  if (uses_window(m.kind)) j["window"] = m.window;
  j["threshold"] = m.threshold;
  json stats;
  switch (m.kind) {
    case DetectorKind::rolling_zscore:
      stats = {{"mean", m.center}, {"std", m.spread}};
      break;
    case DetectorKind::iqr:
      stats = {{"q1", m.q1}, {"median", m.center}, {"q3", m.q3}};
      break;
    case DetectorKind::moving_average_residual:
      stats = {{"mean", m.center}, {"residual_std", m.spread}};
      break;
  }
  j["statistics"] = stats;
  j["fitted_at"] = m.fitted_at;
  return j;
}

inline DetectorModel detector_from_json(const json& j) {
  DetectorModel m;
  try {
    m.kind = parse_detector_kind(j.at("kind").get<std::string>());
    m.window = j.value("window", 64);
    m.threshold = j.at("threshold").get<double>();
    m.fitted_at = j.value("fitted_at", std::int64_t{0});
    if (j.contains("statistics")) {
      const json& s = j.at("statistics");
      switch (m.kind) {
        case DetectorKind::rolling_zscore:
          m.center = s.value("mean", 0.0);
          m.spread = s.value("std", 0.0);
          break;
        case DetectorKind::iqr:
          m.q1 = s.value("q1", 0.0);
          m.center = s.value("median", 0.0);
          m.q3 = s.value("q3", 0.0);
          m.spread = m.q3 - m.q1;
          break;
        case DetectorKind::moving_average_residual:
          m.center = s.value("mean", 0.0);
          m.spread = s.value("residual_std", 0.0);
          break;
      }
    }
  } catch (const json::exception& e) {
    throw DetectorError(std::string("malformed detector JSON: ") + e.what());
  }
  check_hyperparameters(m);
  return m;
}

}  // namespace basecamp::sentinel
