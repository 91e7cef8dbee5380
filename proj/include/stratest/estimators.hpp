#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"

namespace stratest {

/// Stratum sample means of a realized stratified sample plus their
/// w-weighted combinations. Strata align with the PopulationSummary the
/// sample was drawn from.
class SampleMeans {
 public:
  SampleMeans(const PopulationSummary& pop, std::vector<double> ybar, std::vector<double> xbar,
              std::vector<double> zbar)
      : ybar_(std::move(ybar)), xbar_(std::move(xbar)), zbar_(std::move(zbar)) {
    const auto L = pop.num_strata();
    if (ybar_.size() != L || xbar_.size() != L || zbar_.size() != L) {
      throw InputError("sample means do not align with the population strata");
    }
    for (std::size_t h = 0; h < L; ++h) {
      const double w = pop.weight(h).w;
      ybar_st_ += w * ybar_[h];
      xbar_st_ += w * xbar_[h];
      zbar_st_ += w * zbar_[h];
    }
  }

  /// The sample whose stratum means equal the population means.
  static SampleMeans at_population(const PopulationSummary& pop) {
    std::vector<double> y, x, z;
    for (const auto& s : pop.strata()) {
      y.push_back(s.mean_y);
      x.push_back(s.mean_x);
      z.push_back(s.mean_z);
    }
    return SampleMeans(pop, std::move(y), std::move(x), std::move(z));
  }

  const std::vector<double>& ybar() const { return ybar_; }
  const std::vector<double>& xbar() const { return xbar_; }
  const std::vector<double>& zbar() const { return zbar_; }
  std::size_t num_strata() const { return ybar_.size(); }
  double ybar_st() const { return ybar_st_; }
  double xbar_st() const { return xbar_st_; }
  double zbar_st() const { return zbar_st_; }

 private:
  std::vector<double> ybar_, xbar_, zbar_;
  double ybar_st_ = 0.0;
  double xbar_st_ = 0.0;
  double zbar_st_ = 0.0;
};

enum class EstimatorKind {
  classical,            // y_st
  combined_ratio,       // y_st * X / x_st
  combined_product,     // y_st * z_st / Z
  transformed_product,  // y_st * u_st / U,  u = A - x
  ratio_cum_product,    // y_st * (X / x_st) * (Z / z_st)
  tracy_product,        // y_st * (u_st / U) * (z_st / Z)
  plikusas_dual,        // y_st * (x*_st / X) * (Z / z*_st)
  dual_family,          // y_st * (x*_st / X)^a1 * (Z / z*_st)^a2
};

inline constexpr std::array kAllKinds = {
    EstimatorKind::classical,         EstimatorKind::combined_ratio,
    EstimatorKind::combined_product,  EstimatorKind::transformed_product,
    EstimatorKind::ratio_cum_product, EstimatorKind::tracy_product,
    EstimatorKind::plikusas_dual,     EstimatorKind::dual_family,
};

inline std::string_view kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::classical: return "classical";
    case EstimatorKind::combined_ratio: return "combined_ratio";
    case EstimatorKind::combined_product: return "combined_product";
    case EstimatorKind::transformed_product: return "transformed_product";
    case EstimatorKind::ratio_cum_product: return "ratio_cum_product";
    case EstimatorKind::tracy_product: return "tracy_product";
    case EstimatorKind::plikusas_dual: return "plikusas_dual";
    case EstimatorKind::dual_family: return "dual_family";
  }
  return "?";
}

inline std::optional<EstimatorKind> parse_kind(std::string_view name) {
  for (auto k : kAllKinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

inline bool uses_transform_constant(EstimatorKind k) {
  return k == EstimatorKind::transformed_product || k == EstimatorKind::tracy_product;
}

inline bool is_dual(EstimatorKind k) {
  return k == EstimatorKind::plikusas_dual || k == EstimatorKind::dual_family;
}

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::classical;
  std::optional<double> A;
  std::optional<double> alpha1;
  std::optional<double> alpha2;

  static EstimatorSpec classical() { return {EstimatorKind::classical, {}, {}, {}}; }
  static EstimatorSpec combined_ratio() { return {EstimatorKind::combined_ratio, {}, {}, {}}; }
  static EstimatorSpec combined_product() { return {EstimatorKind::combined_product, {}, {}, {}}; }
  static EstimatorSpec ratio_cum_product() {
    return {EstimatorKind::ratio_cum_product, {}, {}, {}};
  }
  static EstimatorSpec plikusas_dual() { return {EstimatorKind::plikusas_dual, {}, {}, {}}; }
  static EstimatorSpec transformed_product(double A) {
    return {EstimatorKind::transformed_product, A, {}, {}};
  }
  static EstimatorSpec tracy_product(double A) { return {EstimatorKind::tracy_product, A, {}, {}}; }
  static EstimatorSpec dual_family(double a1, double a2) {
    return {EstimatorKind::dual_family, {}, a1, a2};
  }

  /// Exponents (a1, a2) of the dual family; (1, 1) for the Plikusas estimator.
  std::pair<double, double> exponents() const {
    if (kind == EstimatorKind::plikusas_dual) return {1.0, 1.0};
    return {alpha1.value_or(0.0), alpha2.value_or(0.0)};
  }

  bool operator==(const EstimatorSpec&) const = default;
};

/// Throws InputError when a required parameter is absent or A coincides with X.
inline void check_spec(const EstimatorSpec& spec, const PopulationMeans& means) {
  if (uses_transform_constant(spec.kind)) {
    if (!spec.A) {
      throw InputError(std::string(kind_name(spec.kind)) + " requires the transform constant A");
    }
    if (!std::isfinite(*spec.A) || *spec.A == means.x) {
      throw InputError(std::string(kind_name(spec.kind)) +
                       ": A must be finite and differ from X (theta = X / (A - X))");
    }
  }
  if (spec.kind == EstimatorKind::dual_family) {
    if (!spec.alpha1 || !spec.alpha2) {
      throw InputError("dual_family requires both exponents a1 and a2");
    }
    if (!std::isfinite(*spec.alpha1) || !std::isfinite(*spec.alpha2)) {
      throw InputError("dual_family exponents must be finite");
    }
  }
}

/// theta = X / (A - X) of a transform-constant estimator.
inline double theta_of(const EstimatorSpec& spec, const PopulationMeans& means) {
  check_spec(spec, means);
  if (!spec.A) throw InputError(std::string(kind_name(spec.kind)) + " has no transform constant");
  return means.x / (*spec.A - means.x);
}

/// Transform constant A = X (1 + theta) / theta for a given theta.
inline double transform_constant(double theta, double mean_x) {
  if (theta == 0.0 || !std::isfinite(theta)) {
    throw DegenerateError("theta = 0 has no finite transform constant A");
  }
  return mean_x * (1.0 + theta) / theta;
}

namespace detail {

inline double parse_double(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw InputError("cannot parse number '" + std::string(text) + "' in '" +
                     std::string(context) + "'");
  }
  return value;
}

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses the compact form "kind[:key=value[,key=value]]", e.g.
/// "tracy_product:A=18631.62" or "dual_family:a1=6.2918,a2=-0.887".
inline EstimatorSpec parse_spec(std::string_view text) {
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto kind = parse_kind(name);
  if (!kind) throw InputError("unknown estimator kind '" + std::string(name) + "'");

  EstimatorSpec spec;
  spec.kind = *kind;
  if (colon != std::string_view::npos) {
    auto rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw InputError("expected key=value in estimator '" + std::string(text) + "'");
      }
      const auto key = item.substr(0, eq);
      const double value = detail::parse_double(item.substr(eq + 1), text);
      if (key == "A" && uses_transform_constant(spec.kind)) {
        spec.A = value;
      } else if ((key == "a1" || key == "alpha1") && spec.kind == EstimatorKind::dual_family) {
        spec.alpha1 = value;
      } else if ((key == "a2" || key == "alpha2") && spec.kind == EstimatorKind::dual_family) {
        spec.alpha2 = value;
      } else {
        throw InputError("parameter '" + std::string(key) + "' does not apply to " +
                         std::string(name));
      }
    }
  }
  if (uses_transform_constant(spec.kind) && !spec.A) {
    throw InputError(std::string(name) + " requires A=<value>");
  }
  if (spec.kind == EstimatorKind::dual_family && (!spec.alpha1 || !spec.alpha2)) {
    throw InputError("dual_family requires a1=<value>,a2=<value>");
  }
  return spec;
}

inline std::string to_string(const EstimatorSpec& spec) {
  std::string out(kind_name(spec.kind));
  if (spec.A) out += ":A=" + detail::shortest(*spec.A);
  if (spec.kind == EstimatorKind::dual_family && spec.alpha1 && spec.alpha2) {
    out += ":a1=" + detail::shortest(*spec.alpha1) + ",a2=" + detail::shortest(*spec.alpha2);
  }
  return out;
}

struct DualMeans {
  double xstar_st = 0.0;
  double zstar_st = 0.0;
};

/// Weighted combination of the per-stratum dual transforms
/// x*_h = (1 + g_h) X_h - g_h x_h, and likewise for z. Unbiased for (X, Z).
inline DualMeans dual_transform_means(const SampleMeans& sample, const PopulationSummary& pop) {
  if (sample.num_strata() != pop.num_strata()) {
    throw InputError("sample means do not align with the population strata");
  }
  DualMeans out;
  for (std::size_t h = 0; h < pop.num_strata(); ++h) {
    const auto& s = pop.stratum(h);
    const double g = pop.g(h);
    const double w = pop.weight(h).w;
    out.xstar_st += w * ((1.0 + g) * s.mean_x - g * sample.xbar()[h]);
    out.zstar_st += w * ((1.0 + g) * s.mean_z - g * sample.zbar()[h]);
  }
  return out;
}

namespace detail {

inline double checked_ratio(double num, double den, const char* what) {
  if (den == 0.0 || !std::isfinite(den)) {
    throw DegenerateSample(std::string("degenerate sample: ") + what + " is zero");
  }
  return num / den;
}

inline double checked_power(double base, double exponent, const char* what) {
  if (exponent == 0.0) return 1.0;
  if (exponent == 1.0) return base;
  if (base <= 0.0 && exponent != std::trunc(exponent)) {
    throw DegenerateSample(std::string("degenerate sample: ") + what +
                           " is non-positive under a fractional exponent");
  }
  if (base == 0.0 && exponent < 0.0) {
    throw DegenerateSample(std::string("degenerate sample: ") + what +
                           " is zero under a negative exponent");
  }
  return std::pow(base, exponent);
}

}  // namespace detail

/// Value of the estimator on a realized sample. Throws DegenerateSample
/// when the sample makes the estimator undefined.
inline double estimate(const EstimatorSpec& spec, const SampleMeans& sample,
                       const PopulationSummary& pop) {
  const auto& M = pop.means();
  check_spec(spec, M);
  const double y = sample.ybar_st();

  switch (spec.kind) {
    case EstimatorKind::classical:
      return y;
    case EstimatorKind::combined_ratio:
      return y * detail::checked_ratio(M.x, sample.xbar_st(), "x_st");
    case EstimatorKind::combined_product:
      return y * (sample.zbar_st() / M.z);
    case EstimatorKind::transformed_product:
      return y * ((*spec.A - sample.xbar_st()) / (*spec.A - M.x));
    case EstimatorKind::ratio_cum_product:
      return y * detail::checked_ratio(M.x, sample.xbar_st(), "x_st") *
             detail::checked_ratio(M.z, sample.zbar_st(), "z_st");
    case EstimatorKind::tracy_product:
      return y * ((*spec.A - sample.xbar_st()) / (*spec.A - M.x)) * (sample.zbar_st() / M.z);
    case EstimatorKind::plikusas_dual:
    case EstimatorKind::dual_family: {
      const auto [a1, a2] = spec.exponents();
      const auto dual = dual_transform_means(sample, pop);
      const double x_factor = detail::checked_power(dual.xstar_st / M.x, a1, "x*_st / X");
      const double z_factor =
          detail::checked_power(detail::checked_ratio(M.z, dual.zstar_st, "z*_st"), a2,
                                "Z / z*_st");
      return y * x_factor * z_factor;
    }
  }
  throw InputError("unknown estimator kind");
}

}  // namespace stratest
