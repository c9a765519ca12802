#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "basecamp/random.hpp"
#include "basecamp/sentinel/detectors.hpp"
#include "basecamp/sentinel/tpe.hpp"

namespace basecamp::sentinel {

inline constexpr std::size_t minimum_series_length = 16;
inline constexpr int default_window = 64;
inline constexpr double default_threshold = 3.0;
inline constexpr int max_window = 200;

/// F1 of predicted against true index sets. Both empty counts as a perfect
/// score, since there was nothing to find and nothing was flagged.
inline double f1_score(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted) {
  std::set<std::size_t> t(truth.begin(), truth.end()), p(predicted.begin(), predicted.end());
  std::size_t tp = 0;
  for (std::size_t i : p) tp += t.count(i);
  std::size_t fp = p.size() - tp, fn = t.size() - tp;
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

/// Either a trial count or a wall-clock limit. Trial counts are
/// reproducible; time limits are not.
struct Budget {
  std::optional<int> trials;
  std::optional<double> seconds;

  static Budget of_trials(int n) {
    Budget b;
    b.trials = n;
    return b;
  }
  static Budget of_seconds(double s) {
    Budget b;
    b.seconds = s;
    return b;
  }
};

struct Selection {
  DetectorModel model;          // refit on the whole series
  std::optional<double> score;  // held-out F1 of the winning trial
  std::optional<double> loss;
  int trials = 0;
  bool used_default = false;  // no labels: fixed detector, nothing searched
  TrialHistory history;
};

/// Split point: the first 70% trains, the rest is held out.
inline std::size_t training_length(std::size_t n) { return n * 7 / 10; }

/// Joint space: detector kind (0 zscore, 1 iqr, 2 moving-average residual),
/// window (log-scaled, ignored by iqr) and threshold k (log-scaled).
inline SearchSpace detector_space(std::size_t train_len) {
  double hi = static_cast<double>(std::min<std::size_t>(max_window, train_len - 1));
  return {{"kind", Param::Type::integer, 0, 2, false},
          {"window", Param::Type::integer, 2, std::max(2.0, hi), true},
          {"threshold", Param::Type::continuous, 0.5, 10, true}};
}

inline DetectorModel model_from_params(const std::vector<double>& x) {
  DetectorModel m;
  m.kind = static_cast<DetectorKind>(static_cast<int>(x[0]));
  m.window = static_cast<int>(x[1]);
  m.threshold = x[2];
  return m;
}

/// Indexes of `all` that fall in [from, end).
inline std::vector<std::size_t> suffix_of(const std::vector<std::size_t>& all, std::size_t from) {
  std::vector<std::size_t> out;
  for (std::size_t i : all)
    if (i >= from) out.push_back(i);
  return out;
}

/// Loss of a candidate: fit on the training prefix, detect over the whole
/// series, then 1 - F1 restricted to the held-out suffix.
inline double holdout_loss(const DetectorModel& candidate, const std::vector<double>& data,
                           const std::vector<std::size_t>& labels) {
  std::size_t split = training_length(data.size());
  std::vector<double> train(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(split));
  DetectorModel m = fit(candidate, train);
  auto fired = detect_indexes(m, data);
  return 1.0 - f1_score(suffix_of(labels, split), suffix_of(fired, split));
}

inline DetectorModel default_model(std::size_t n) {
  DetectorModel m;
  m.kind = DetectorKind::rolling_zscore;
  m.window = static_cast<int>(std::min<std::size_t>(default_window, n));
  m.threshold = default_threshold;
  return m;
}

/// Searches the joint detector space with TPE against the labels and refits
/// the best candidate on the whole series. Without labels there is no
/// objective to search, so the fixed default detector is returned and
/// flagged.
inline Selection select_model(const std::vector<double>& data, const std::optional<std::vector<std::size_t>>& labels,
                              const Budget& budget, std::uint64_t seed) {
  if (data.size() < minimum_series_length)
    throw DetectorError("model selection needs at least " + std::to_string(minimum_series_length) + " samples, got " +
                        std::to_string(data.size()));
  for (double x : data)
    if (!std::isfinite(x)) throw DetectorError("series contains a non-finite value");
  Selection out;
  if (!labels) {
    out.model = fit(default_model(data.size()), data);
    out.used_default = true;
    return out;
  }
  for (std::size_t i : *labels)
    if (i >= data.size()) throw DetectorError("label index " + std::to_string(i) + " is past the end of the series");
  if (!budget.trials && !budget.seconds) throw DetectorError("budget needs a trial count or a time limit");
  if (budget.trials && *budget.trials < 1) throw DetectorError("trial budget must be >= 1");
  if (budget.seconds && !(*budget.seconds > 0)) throw DetectorError("time budget must be > 0");

  out.history.space = detector_space(training_length(data.size()));
  Rng rng(seed);
  auto started = std::chrono::steady_clock::now();
  auto more = [&] {
    int n = static_cast<int>(out.history.trials.size());
    if (budget.trials) return n < *budget.trials;
    if (n == 0) return true;
    std::chrono::duration<double> spent = std::chrono::steady_clock::now() - started;
    return spent.count() < *budget.seconds;
  };
  std::size_t best = 0;
  while (more()) {
    auto x = tpe_suggest(out.history, rng);
    double loss = holdout_loss(model_from_params(x), data, *labels);
    append(out.history, {x, loss});
    if (loss < out.history.trials[best].loss) best = out.history.trials.size() - 1;
  }
  const Trial& win = out.history.trials[best];
  out.trials = static_cast<int>(out.history.trials.size());
  out.loss = win.loss;
  out.score = 1.0 - win.loss;
  out.model = fit(model_from_params(win.params), data);
  return out;
}

struct AnomalyReport {
  std::vector<std::size_t> anomalies;  // ascending, unique
  DetectorModel model;
  std::optional<double> score;
  json selection;  // how the model was chosen; null when not known
};

inline AnomalyReport detect(const DetectorModel& m, const std::vector<double>& data) {
  return {detect_indexes(m, data), m, std::nullopt, nullptr};
}

inline json selection_json(const Selection& s) {
  if (s.used_default)
    return {{"mode", "default"}, {"warning", "no labels given; using the fixed default detector without search"}};
  return {{"mode", "tpe"}, {"trials", s.trials}, {"loss", *s.loss}};
}

inline AnomalyReport detect(const Selection& s, const std::vector<double>& data) {
  AnomalyReport r = detect(s.model, data);
  r.score = s.score;
  r.selection = selection_json(s);
  return r;
}

inline json to_json(const AnomalyReport& r) {
  json model = to_json(r.model);
  if (!r.selection.is_null()) model["selection"] = r.selection;
  json j = {{"anomalies", r.anomalies}, {"model", model}};
  j["score"] = r.score ? json(*r.score) : json(nullptr);
  return j;
}

/// Checks a parsed report against the documented shape; returns "" if valid.
inline std::string check_report_schema(const json& j, std::size_t series_length) {
  if (!j.is_object()) return "report is not an object";
  for (const char* key : {"anomalies", "model", "score"})
    if (!j.contains(key)) return std::string("missing key '") + key + "'";
  if (j.size() != 3) return "unexpected top-level keys";
  if (!j["anomalies"].is_array()) return "anomalies is not an array";
  std::int64_t prev = -1;
  for (const auto& a : j["anomalies"]) {
    if (!a.is_number_unsigned()) return "anomaly index is not a non-negative integer";
    auto i = a.get<std::int64_t>();
    if (i <= prev) return "anomalies are not strictly ascending";
    if (static_cast<std::size_t>(i) >= series_length) return "anomaly index out of range";
    prev = i;
  }
  if (!j["score"].is_null() && !(j["score"].is_number() && j["score"] >= 0 && j["score"] <= 1))
    return "score is neither null nor in [0, 1]";
  const json& m = j["model"];
  if (!m.is_object() || !m.contains("kind") || !m.contains("threshold") || !m.contains("statistics"))
    return "model descriptor lacks kind, threshold or statistics";
  try {
    detector_from_json(m);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace basecamp::sentinel
