#pragma once

// First-order mean squared errors of the estimator family, closed-form
// optimizers for the transform constant and the dual-family exponents,
// first-order bias of the dual family and the efficiency conditions
// against the classical stratified mean.

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"
#include "stratest/estimators.hpp"
#include "stratest/moments.hpp"

namespace stratest {

struct ThetaOptimum {
  double theta = 0.0;
  double A = 0.0;
  double mse_min = 0.0;
};

struct AlphaOptimum {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double mse_min = 0.0;
};

struct MseReport {
  EstimatorSpec estimator;
  /// Not clamped: a negative value signals first-order breakdown and comes
  /// with a warning.
  double mse = 0.0;
  /// 100 * Var(y_st) / mse, absent when mse <= 0.
  std::optional<double> pre;
  std::variant<std::monostate, ThetaOptimum, AlphaOptimum> optimal_params;
  std::vector<std::string> warnings;
};

/// Exact SRSWOR variance of the stratified mean, Y^2 * V200.
inline double var_yst(const PopulationMeans& means, const MomentSet& m) {
  return means.y * means.y * m.v200;
}

namespace detail {

// Bracketed quadratic forms; multiply by Y^2 for the MSE.

inline double ratio_form(const MomentSet& m) { return m.v200 + m.v020 - 2.0 * m.v110; }

inline double product_form(const MomentSet& m) { return m.v200 + m.v002 + 2.0 * m.v101; }

inline double transformed_product_form(const MomentSet& m, double theta) {
  return m.v200 + theta * theta * m.v020 - 2.0 * theta * m.v110;
}

// Linearization of y_st (X / x_st)(Z / z_st): coefficients (1, -1, -1) on
// (e0, e1, e2), so the yz and xy cross terms are negative and xz positive.
inline double ratio_cum_product_form(const MomentSet& m) {
  return m.v200 + m.v020 + m.v002 + 2.0 * (m.v011 - m.v110 - m.v101);
}

inline double tracy_form(const MomentSet& m, double theta) {
  return m.v200 + theta * theta * m.v020 + m.v002 -
         2.0 * (theta * m.v110 - m.v101 + theta * m.v011);
}

inline double dual_family_form(const DualMomentSet& d, double a1, double a2) {
  return d.v200 + a1 * a1 * d.v020 + a2 * a2 * d.v002 +
         2.0 * (a1 * d.v110 - a1 * a2 * d.v011 - a2 * d.v101);
}

inline std::string negative_mse_warning(const EstimatorSpec& spec, double mse) {
  return "first-order MSE of " + to_string(spec) + " is " + detail::shortest(mse) +
         " (<= 0); the moment inputs are inconsistent (check covariances against the "
         "Cauchy-Schwarz bound)";
}

}  // namespace detail

/// MSE of the Tracy-type product estimator as a function of theta.
inline double mse_tracy(const PopulationMeans& means, const MomentSet& m, double theta) {
  return means.y * means.y * detail::tracy_form(m, theta);
}

/// MSE of the dual family as a function of its exponents.
inline double mse_dual_family(const PopulationMeans& means, const DualMomentSet& d, double a1,
                              double a2) {
  return means.y * means.y * detail::dual_family_form(d, a1, a2);
}

/// First-order MSE of any estimator kind. Dual kinds need the primed moments.
inline MseReport mse_first_order(const EstimatorSpec& spec, const PopulationMeans& means,
                                 const MomentSet& m,
                                 const std::optional<DualMomentSet>& dual = std::nullopt) {
  check_spec(spec, means);
  const double Y2 = means.y * means.y;

  MseReport report;
  report.estimator = spec;
  switch (spec.kind) {
    case EstimatorKind::classical:
      report.mse = Y2 * m.v200;
      break;
    case EstimatorKind::combined_ratio:
      report.mse = Y2 * detail::ratio_form(m);
      break;
    case EstimatorKind::combined_product:
      report.mse = Y2 * detail::product_form(m);
      break;
    case EstimatorKind::transformed_product:
      report.mse = Y2 * detail::transformed_product_form(m, theta_of(spec, means));
      break;
    case EstimatorKind::ratio_cum_product:
      report.mse = Y2 * detail::ratio_cum_product_form(m);
      break;
    case EstimatorKind::tracy_product:
      report.mse = Y2 * detail::tracy_form(m, theta_of(spec, means));
      break;
    case EstimatorKind::plikusas_dual:
    case EstimatorKind::dual_family: {
      if (!dual) {
        throw InputError(std::string(kind_name(spec.kind)) + " needs the dual moment set");
      }
      const auto [a1, a2] = spec.exponents();
      report.mse = Y2 * detail::dual_family_form(*dual, a1, a2);
      break;
    }
  }

  const double baseline = var_yst(means, m);
  if (report.mse > 0.0) {
    report.pre = 100.0 * baseline / report.mse;
  } else if (report.mse < 0.0 || baseline > 0.0) {
    report.warnings.push_back(detail::negative_mse_warning(spec, report.mse));
  }
  return report;
}

/// Percent relative efficiency 100 * Var(y_st) / MSE.
inline double pre(const MseReport& target, double baseline_var) {
  if (!(target.mse > 0.0)) {
    throw DegenerateError("PRE undefined: MSE of " + to_string(target.estimator) + " is " +
                          detail::shortest(target.mse) + " (first-order breakdown)");
  }
  return 100.0 * baseline_var / target.mse;
}

/// Minimizer of the Tracy-type MSE over theta, theta = (V110 + V011) / V020,
/// with the matching A = X (1 + theta) / theta.
inline ThetaOptimum optimize_theta(const PopulationMeans& means, const MomentSet& m) {
  if (!(m.v020 > 0.0)) {
    throw DegenerateError("optimize_theta: V020 must be positive");
  }
  ThetaOptimum out;
  out.theta = (m.v110 + m.v011) / m.v020;
  if (out.theta == 0.0) {
    throw DegenerateError("degenerate optimum: theta_opt = 0 has no transform constant A");
  }
  out.A = transform_constant(out.theta, means.x);
  out.mse_min = mse_tracy(means, m, out.theta);
  return out;
}

/// Stationary point of the dual-family MSE in (a1, a2). The form is a
/// convex quadratic whenever the determinant V'020 V'002 - V'011^2 is
/// positive.
inline AlphaOptimum optimize_alphas(const DualMomentSet& d, const PopulationMeans& means) {
  const double det = d.v020 * d.v002 - d.v011 * d.v011;
  if (!(std::abs(det) > 1e-12 * d.v020 * d.v002) || det == 0.0) {
    throw DegenerateError("collinear auxiliaries: V'020 V'002 - V'011^2 is numerically zero");
  }
  AlphaOptimum out;
  out.alpha1 = (d.v101 * d.v011 - d.v110 * d.v002) / det;
  out.alpha2 = (d.v020 * d.v101 - d.v110 * d.v011) / det;
  out.mse_min = mse_dual_family(means, d, out.alpha1, out.alpha2);
  return out;
}

/// First-order bias of the dual family:
/// Y [a1 V'110 - a2 V'101 - a1 a2 V'011 + a1(a1-1)/2 V'020 + a2(a2+1)/2 V'002].
inline double bias_first_order_dual(const DualMomentSet& d, const PopulationMeans& means,
                                    double a1, double a2) {
  return means.y * (a1 * d.v110 - a2 * d.v101 - a1 * a2 * d.v011 +
                    0.5 * a1 * (a1 - 1.0) * d.v020 + 0.5 * a2 * (a2 + 1.0) * d.v002);
}

struct EfficiencyVerdict {
  double B1 = 0.0;
  double B2 = 0.0;
  double C = 0.0;
  double D = 0.0;
  double margin21 = 0.0;  // B1 - 2 B2; negative means the Tracy-type estimator wins
  double margin22 = 0.0;  // C - 2 D; negative means the dual family wins
  bool condition21 = false;
  bool condition22 = false;
};

/// Conditions under which the Tracy-type estimator (at theta) and the dual
/// family (at a1, a2) beat the classical stratified mean. Each margin is
/// the estimator's MSE minus Var(y_st), divided by Y^2.
inline EfficiencyVerdict efficiency_conditions(const MomentSet& m, const DualMomentSet& d,
                                               double theta, double a1, double a2) {
  EfficiencyVerdict v;
  v.B1 = theta * theta * m.v020 + m.v002;
  v.B2 = theta * m.v110 - m.v101 + theta * m.v011;
  v.C = a1 * a1 * d.v020 + a2 * a2 * d.v002 - 2.0 * a1 * a2 * d.v011;
  v.D = a2 * d.v101 - a1 * d.v110;
  v.margin21 = v.B1 - 2.0 * v.B2;
  v.margin22 = v.C - 2.0 * v.D;
  v.condition21 = v.margin21 < 0.0;
  v.condition22 = v.margin22 < 0.0;
  return v;
}

/// Open theta interval on which the Tracy-type estimator beats y_st, i.e.
/// where B1 - 2 B2 < 0. Empty when the quadratic has no real roots.
struct ThetaInterval {
  double lower = 0.0;
  double upper = 0.0;
};

inline std::optional<ThetaInterval> beneficial_theta_range(const MomentSet& m) {
  // theta^2 V020 - 2 theta (V110 + V011) + (V002 + 2 V101) < 0
  const double a = m.v020;
  const double b = -2.0 * (m.v110 + m.v011);
  const double c = m.v002 + 2.0 * m.v101;
  if (!(a > 0.0)) return std::nullopt;
  const double disc = b * b - 4.0 * a * c;
  if (!(disc > 0.0)) return std::nullopt;
  // Stable root pair.
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = q / a;
  double r2 = c / q;
  if (r1 > r2) std::swap(r1, r2);
  return ThetaInterval{r1, r2};
}

}  // namespace stratest
