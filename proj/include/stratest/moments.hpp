#pragma once

// Order-2 relative moment functionals of the stratified sample means.
//
// With e0, e1, e2 the relative errors of the stratified means of y, x, z,
//   V_rst = sum_h w_h^2 gamma_h S_(rst)h / (Y^r X^s Z^t),   r + s + t = 2,
// and the dual counterparts V'_rst carry an extra (-g_h)^(s+t) inside the
// sum because the dual transform maps x_h -> (1 + g_h) X_h - g_h x_h.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"

namespace stratest {

struct MomentSet {
  double v200 = 0.0;
  double v020 = 0.0;
  double v002 = 0.0;
  double v110 = 0.0;
  double v101 = 0.0;
  double v011 = 0.0;

  bool operator==(const MomentSet&) const = default;
};

/// Primed moments. v200 coincides with the unprimed v200.
struct DualMomentSet {
  double v200 = 0.0;
  double v020 = 0.0;
  double v002 = 0.0;
  double v110 = 0.0;
  double v101 = 0.0;
  double v011 = 0.0;

  bool operator==(const DualMomentSet&) const = default;
};

/// Unnormalized numerators sum_h w_h^2 gamma_h (...) of a moment set.
/// Additive over disjoint sets of strata.
struct MomentSums {
  double yy = 0.0;
  double xx = 0.0;
  double zz = 0.0;
  double xy = 0.0;
  double yz = 0.0;
  double xz = 0.0;

  MomentSums& operator+=(const MomentSums& o) {
    yy += o.yy;
    xx += o.xx;
    zz += o.zz;
    xy += o.xy;
    yz += o.yz;
    xz += o.xz;
    return *this;
  }
};

namespace detail {

inline std::vector<std::size_t> all_strata(const PopulationSummary& pop) {
  std::vector<std::size_t> idx(pop.num_strata());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

inline void require_nonzero_means(const PopulationMeans& m) {
  if (m.y == 0.0 || m.x == 0.0 || m.z == 0.0) {
    throw DegenerateError("moment functionals need nonzero combined means Y, X, Z");
  }
}

}  // namespace detail

inline MomentSums moment_sums(const PopulationSummary& pop, std::span<const std::size_t> strata) {
  MomentSums out;
  for (std::size_t h : strata) {
    const auto& s = pop.stratum(h);
    const auto& sw = pop.weight(h);
    const double c = sw.w * sw.w * sw.gamma;
    out.yy += c * s.s_y * s.s_y;
    out.xx += c * s.s_x * s.s_x;
    out.zz += c * s.s_z * s.s_z;
    out.xy += c * s.s_xy;
    out.yz += c * s.s_yz;
    out.xz += c * s.s_xz;
  }
  return out;
}

/// Numerators of the primed moments. Each term carries (-g_h)^(s+t):
/// squared for xx, zz, xz; negated for xy, yz; absent for yy.
inline MomentSums dual_moment_sums(const PopulationSummary& pop,
                                   std::span<const std::size_t> strata) {
  MomentSums out;
  for (std::size_t h : strata) {
    const auto& s = pop.stratum(h);
    const auto& sw = pop.weight(h);
    const double g = pop.g(h);
    const double c = sw.w * sw.w * sw.gamma;
    out.yy += c * s.s_y * s.s_y;
    out.xx += c * g * g * s.s_x * s.s_x;
    out.zz += c * g * g * s.s_z * s.s_z;
    out.xy += -c * g * s.s_xy;
    out.yz += -c * g * s.s_yz;
    out.xz += c * g * g * s.s_xz;
  }
  return out;
}

template <typename Set>
Set normalize_moments(const MomentSums& sums, const PopulationMeans& m) {
  detail::require_nonzero_means(m);
  Set out;
  out.v200 = sums.yy / (m.y * m.y);
  out.v020 = sums.xx / (m.x * m.x);
  out.v002 = sums.zz / (m.z * m.z);
  out.v110 = sums.xy / (m.x * m.y);
  out.v101 = sums.yz / (m.y * m.z);
  out.v011 = sums.xz / (m.x * m.z);
  return out;
}

inline MomentSet compute_moments(const PopulationSummary& pop) {
  detail::require_nonzero_means(pop.means());
  const auto idx = detail::all_strata(pop);
  return normalize_moments<MomentSet>(moment_sums(pop, idx), pop.means());
}

/// Throws DegenerateError if any stratum is a census (g_h undefined).
inline DualMomentSet compute_dual_moments(const PopulationSummary& pop) {
  detail::require_nonzero_means(pop.means());
  const auto idx = detail::all_strata(pop);
  return normalize_moments<DualMomentSet>(dual_moment_sums(pop, idx), pop.means());
}

}  // namespace stratest
