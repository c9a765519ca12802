#pragma once

// Toy map-matching nodes for the bundled coordination demo. GPS points are
// [x, y] pairs, a map cell is {"segments": [[x0, y0, x1, y1], ...]}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "basecamp/coord/execute.hpp"

namespace basecamp::demo {

inline constexpr const char* mapmatch_source = R"cdr(// Map matching for one GPS trace. Values are consumed exactly once, so the
// GPS vector, the map cell and the candidates are cloned before reuse.
fn match_one(gv: GpsVector, mapcell: MapCell) -> RoadSpeedVector {
    let gv_trellis: GpsVector = clone(gv);
    let map_trellis: MapCell = clone(mapcell);
    let map_interp: MapCell = clone(mapcell);
    #[kernel(offloaded = true, multiplicity = [1, 1, 1, 1],
        path = "projection.cpp")]
    let cv: CandiVector = projection(gv, mapcell);
    let cv_viterbi: CandiVector = clone(cv);

    let t: Trellis = build_trellis(gv_trellis, cv, map_trellis);
    let rsvbb: RoadSpeedVector = viterbi(t, cv_viterbi);
    interpolate(rsvbb, map_interp)
}
)cdr";

namespace mapmatch {

using coord::json;
using coord::Payload;

struct Candidate {
  int segment = -1;
  double x = 0, y = 0, distance = 0;
};

inline double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

/// Candidate lists per GPS point. A bare [x, y] entry (what an identity
/// projection stub passes on) is read as one off-map candidate at that point.
inline std::vector<std::vector<Candidate>> candidates(const json& cv) {
  std::vector<std::vector<Candidate>> out;
  for (const auto& entry : cv) {
    std::vector<Candidate> cs;
    if (entry.is_array() && entry.size() == 2 && entry[0].is_number()) {
      cs.push_back({-1, entry[0].get<double>(), entry[1].get<double>(), 0.0});
    } else {
      for (const auto& c : entry)
        cs.push_back({c.at("segment").get<int>(), c.at("x").get<double>(), c.at("y").get<double>(),
                      c.at("distance").get<double>()});
    }
    out.push_back(std::move(cs));
  }
  return out;
}

/// Projects every point onto every segment and keeps the two nearest.
inline Payload projection(const coord::DfgNode&, const std::vector<Payload>& args) {
  const json& gv = args.at(0).value;
  const json& segs = args.at(1).value.at("segments");
  json cv = json::array();
  for (const auto& p : gv) {
    double px = p[0].get<double>(), py = p[1].get<double>();
    std::vector<Candidate> cs;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      double ax = segs[s][0].get<double>(), ay = segs[s][1].get<double>();
      double bx = segs[s][2].get<double>(), by = segs[s][3].get<double>();
      double dx = bx - ax, dy = by - ay;
      double len2 = dx * dx + dy * dy;
      double t = len2 > 0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0) : 0.0;
      double qx = ax + t * dx, qy = ay + t * dy;
      cs.push_back({static_cast<int>(s), qx, qy, dist(px, py, qx, qy)});
    }
    std::stable_sort(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });
    if (cs.size() > 2) cs.resize(2);
    json row = json::array();
    for (const auto& c : cs) row.push_back({{"segment", c.segment}, {"x", c.x}, {"y", c.y}, {"distance", c.distance}});
    cv.push_back(std::move(row));
  }
  return {"CandiVector", cv};
}

/// Emission cost = distance to the candidate; transition cost = mismatch
/// between on-road and GPS step lengths plus a segment-change penalty.
inline Payload build_trellis(const coord::DfgNode&, const std::vector<Payload>& args) {
  const json& gv = args.at(0).value;
  auto cs = candidates(args.at(1).value);
  json emission = json::array();
  for (const auto& row : cs) {
    json e = json::array();
    for (const auto& c : row) e.push_back(c.distance);
    emission.push_back(std::move(e));
  }
  json transition = json::array();
  for (std::size_t k = 0; k + 1 < cs.size(); ++k) {
    double gps_step = dist(gv[k][0].get<double>(), gv[k][1].get<double>(), gv[k + 1][0].get<double>(),
                           gv[k + 1][1].get<double>());
    json m = json::array();
    for (const auto& a : cs[k]) {
      json r = json::array();
      for (const auto& b : cs[k + 1])
        r.push_back(std::fabs(dist(a.x, a.y, b.x, b.y) - gps_step) + (a.segment == b.segment ? 0.0 : 0.5));
      m.push_back(std::move(r));
    }
    transition.push_back(std::move(m));
  }
  return {"Trellis", {{"emission", emission}, {"transition", transition}}};
}

/// Minimum-cost state path; ties go to the lower state index. Speed at a
/// point is the on-road distance from the previous matched point (unit time).
inline Payload viterbi(const coord::DfgNode&, const std::vector<Payload>& args) {
  const json& t = args.at(0).value;
  auto cs = candidates(args.at(1).value);
  std::size_t n = cs.size();
  json out = json::array();
  if (n == 0) return {"RoadSpeedVector", out};
  std::vector<std::vector<double>> cost(n);
  std::vector<std::vector<std::size_t>> back(n);
  for (std::size_t s = 0; s < cs[0].size(); ++s) cost[0].push_back(t["emission"][0][s].get<double>());
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t s = 0; s < cs[k].size(); ++s) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t r = 0; r < cs[k - 1].size(); ++r) {
        double c = cost[k - 1][r] + t["transition"][k - 1][r][s].get<double>();
        if (c < best) {
          best = c;
          arg = r;
        }
      }
      cost[k].push_back(best + t["emission"][k][s].get<double>());
      back[k].push_back(arg);
    }
  }
  std::vector<std::size_t> path(n);
  path[n - 1] = static_cast<std::size_t>(std::min_element(cost[n - 1].begin(), cost[n - 1].end()) - cost[n - 1].begin());
  for (std::size_t k = n - 1; k > 0; --k) path[k - 1] = back[k][path[k]];
  auto at = [&](std::size_t k) -> const Candidate& { return cs[k][path[k]]; };
  for (std::size_t k = 0; k < n; ++k) {
    // The first point reuses the first step's speed.
    std::size_t step = k == 0 ? std::min<std::size_t>(1, n - 1) : k;
    double speed = step == 0 ? 0.0 : dist(at(step - 1).x, at(step - 1).y, at(step).x, at(step).y);
    out.push_back({{"segment", at(k).segment}, {"x", at(k).x}, {"y", at(k).y}, {"speed", speed}});
  }
  return {"RoadSpeedVector", out};
}

/// Mean speed per map segment; segments without samples carry null.
inline Payload interpolate(const coord::DfgNode&, const std::vector<Payload>& args) {
  const json& rsv = args.at(0).value;
  const json& segs = args.at(1).value.at("segments");
  json out = json::array();
  int unmatched = 0;
  for (const auto& p : rsv)
    if (p.at("segment").get<int>() < 0) ++unmatched;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    double sum = 0;
    int count = 0;
    for (const auto& p : rsv) {
      if (p.at("segment").get<int>() != static_cast<int>(s)) continue;
      sum += p.at("speed").get<double>();
      ++count;
    }
    out.push_back({{"segment", s}, {"samples", count}, {"speed", count ? json(sum / count) : json()}});
  }
  return {"RoadSpeedVector", {{"segments", out}, {"unmatched", unmatched}}};
}

}  // namespace mapmatch

/// Toy software nodes. `with_projection = false` leaves projection to the
/// identity stub its opaque path falls back to.
inline coord::Implementations mapmatch_implementations(bool with_projection = true) {
  coord::Implementations impls;
  if (with_projection) impls.functions["projection"] = mapmatch::projection;
  impls.functions["build_trellis"] = mapmatch::build_trellis;
  impls.functions["viterbi"] = mapmatch::viterbi;
  impls.functions["interpolate"] = mapmatch::interpolate;
  return impls;
}

/// Eight GPS samples drifting along two roads, with a parallel decoy road.
inline std::vector<coord::Payload> mapmatch_inputs() {
  using coord::json;
  json gv = json::parse("[[0.1, 0.3], [1.2, 0.2], [2.1, -0.2], [3.0, 0.4], [3.9, 0.9], [4.2, 2.1], [4.1, 3.2], [3.8, 4.4]]");
  json map = json::parse(R"({"segments": [[0.0, 0.0, 4.0, 0.0], [4.0, 0.0, 4.0, 4.0], [0.0, 1.0, 4.0, 1.0]]})");
  return {{"GpsVector", gv}, {"MapCell", map}};
}

}  // namespace basecamp::demo
