#pragma once

// Major-absorber demo kernel and a generator for valid inputs. The source is
// kept byte-identical to demos/major_absorber.ekl.

#include <cstdint>
#include <functional>
#include <string_view>

#include "basecamp/ir/evaluate.hpp"
#include "basecamp/random.hpp"

namespace basecamp::demo {

inline constexpr std::string_view major_absorber_source = R"ekl(// Major-absorber optical depth for one spectral band of a correlated-k scheme.
// Table extents are shrunk to desk scale; real-valued tensors take the
// format passed to `basecamp compile --format`.
const NCOL = 16;
const NG = 16;
const NFLAV = 3;
const NBND = 4;
const NTEMP = 8;
const NPRES = 8;
const NETA = 4;

index x : NCOL;  // column
index g : NG;    // g-point
index t : 2;     // temperature interpolation offset
index p : 2;     // pressure interpolation offset
index e : 2;     // eta interpolation offset
parallel x;

tensor p_lay : [NCOL];
scalar strato;
scalar bnd : int;
tensor bnd_to_flav : [2, NBND] of int;
tensor j_T : [NCOL] of int;
tensor j_p : [NCOL] of int;
tensor j_eta : [NFLAV, NCOL, 2] of int;
tensor r_mix : [NFLAV, NCOL, 2];
tensor f_major : [NFLAV, NCOL, 2, 2, 2];
tensor k_major : [NTEMP, NPRES, NETA, NG];

i_strato = select(p_lay[x] <= strato, 1, 0)
i_flav   = bnd_to_flav[i_strato[x], bnd]
i_T[x, t] = [j_T[x], j_T[x]+1]
i_eta[x, p, e] = [j_eta[i_flav[x], x, p], j_eta[i_flav[x], x, p]+1]
i_p[x, p] = [j_p[x]+i_strato[x], j_p[x]+i_strato[x]+1]
tau_abs[x, g] = (r_mix[i_flav[x], x, e]
                 * f_major[i_flav[x], x, t, p, e]
                 * k_major[i_T[x, t], i_p[x, p], i_eta[x, p, e], g])
)ekl";

/// Random inputs whose integer tables keep every gather in range. Real
/// values come from `sample` (uniform [0, 1) by default).
inline ir::TensorMap major_absorber_inputs(Rng& rng, const std::function<double(Rng&)>& sample = {}) {
  constexpr std::int64_t ncol = 16, ng = 16, nflav = 3, nbnd = 4, ntemp = 8, npres = 8, neta = 4;
  auto real = [&](std::vector<std::int64_t> shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = sample ? sample(rng) : rng.uniform();
    return ir::DenseTensor::make(std::move(shape), std::move(v));
  };
  auto ints = [&](std::vector<std::int64_t> shape, std::int64_t hi) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = static_cast<double>(rng.between(0, hi));
    return ir::DenseTensor::make(std::move(shape), std::move(v), NumericFormat::integer());
  };
  ir::TensorMap m;
  m["p_lay"] = real({ncol});
  m["strato"] = real({});
  m["bnd"] = ints({}, nbnd - 1);
  m["bnd_to_flav"] = ints({2, nbnd}, nflav - 1);
  m["j_T"] = ints({ncol}, ntemp - 2);
  m["j_p"] = ints({ncol}, npres - 3);
  m["j_eta"] = ints({nflav, ncol, 2}, neta - 2);
  m["r_mix"] = real({nflav, ncol, 2});
  m["f_major"] = real({nflav, ncol, 2, 2, 2});
  m["k_major"] = real({ntemp, npres, neta, ng});
  return m;
}

}  // namespace basecamp::demo
