#pragma once

// Stratified population data model: unit frames, per-stratum summaries,
// the combined population summary, input validation and Neyman allocation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stratest/error.hpp"

namespace stratest {

using StratumId = std::string;
using Count = std::int64_t;

/// Unit-level values of one stratum. y is the study variable, x and z the
/// two auxiliary variables; the three sequences are parallel.
struct UnitFrame {
  StratumId stratum_id;
  std::vector<double> y;
  std::vector<double> x;
  std::vector<double> z;

  std::size_t size() const { return y.size(); }
};

/// The three variable pairs that carry a covariance.
enum class Pair { xy, yz, xz };

inline constexpr Pair kAllPairs[] = {Pair::xy, Pair::yz, Pair::xz};

inline const char* pair_name(Pair p) {
  switch (p) {
    case Pair::xy: return "xy";
    case Pair::yz: return "yz";
    case Pair::xz: return "xz";
  }
  return "?";
}

/// Population moments of one stratum. Standard deviations and covariances
/// use divisor N - 1. The rho fields are optional published correlations,
/// used only to cross-check the covariances.
struct StratumSummary {
  StratumId stratum_id;
  Count N = 0;
  Count n = 0;
  double mean_y = 0.0;
  double mean_x = 0.0;
  double mean_z = 0.0;
  double s_y = 0.0;
  double s_x = 0.0;
  double s_z = 0.0;
  double s_xy = 0.0;
  double s_yz = 0.0;
  double s_xz = 0.0;
  std::optional<double> rho_xy;
  std::optional<double> rho_yz;
  std::optional<double> rho_xz;

  double& covariance(Pair p) {
    switch (p) {
      case Pair::xy: return s_xy;
      case Pair::yz: return s_yz;
      default: return s_xz;
    }
  }
  double covariance(Pair p) const { return const_cast<StratumSummary&>(*this).covariance(p); }

  /// Product of the two standard deviations of the pair (the Cauchy-Schwarz bound).
  double sd_product(Pair p) const {
    switch (p) {
      case Pair::xy: return s_x * s_y;
      case Pair::yz: return s_y * s_z;
      default: return s_x * s_z;
    }
  }

  const std::optional<double>& published_rho(Pair p) const {
    switch (p) {
      case Pair::xy: return rho_xy;
      case Pair::yz: return rho_yz;
      default: return rho_xz;
    }
  }

  bool operator==(const StratumSummary&) const = default;
};

/// Per-stratum design quantities derived from the sizes.
struct StratumWeights {
  double w = 0.0;      // N_h / N
  double f = 0.0;      // n_h / N_h
  double gamma = 0.0;  // (1 - f_h) / n_h
  std::optional<double> g;  // n_h / (N_h - n_h), absent for a census stratum
};

/// Combined population means (Y, X, Z). Everything the MSE theory needs
/// besides the moment functionals.
struct PopulationMeans {
  double y = 0.0;
  double x = 0.0;
  double z = 0.0;
};

class PopulationSummary;
PopulationSummary combine(std::vector<StratumSummary> strata);

/// Ordered strata plus the derived weights and combined means. Only
/// constructible through combine(), so the derived fields always agree
/// with the strata.
class PopulationSummary {
 public:
  const std::vector<StratumSummary>& strata() const { return strata_; }
  const std::vector<StratumWeights>& weights() const { return weights_; }
  const StratumSummary& stratum(std::size_t h) const { return strata_.at(h); }
  const StratumWeights& weight(std::size_t h) const { return weights_.at(h); }
  std::size_t num_strata() const { return strata_.size(); }
  Count total_size() const { return total_N_; }
  Count total_sample_size() const {
    return std::accumulate(strata_.begin(), strata_.end(), Count{0},
                           [](Count acc, const StratumSummary& s) { return acc + s.n; });
  }

  double mean_y() const { return means_.y; }
  double mean_x() const { return means_.x; }
  double mean_z() const { return means_.z; }
  const PopulationMeans& means() const { return means_; }

  /// True when some stratum is fully enumerated (n_h = N_h), which rules
  /// out every dual-transform operation.
  bool has_census_stratum() const {
    return std::any_of(weights_.begin(), weights_.end(),
                       [](const StratumWeights& sw) { return !sw.g.has_value(); });
  }

  /// g_h, or DegenerateError for a census stratum.
  double g(std::size_t h) const {
    const auto& sw = weights_.at(h);
    if (!sw.g) {
      throw DegenerateError("stratum '" + strata_[h].stratum_id +
                            "' is a census (n = N); the dual transform is undefined");
    }
    return *sw.g;
  }

 private:
  friend PopulationSummary combine(std::vector<StratumSummary> strata);
  PopulationSummary() = default;

  std::vector<StratumSummary> strata_;
  std::vector<StratumWeights> weights_;
  PopulationMeans means_;
  Count total_N_ = 0;
};

namespace detail {

inline void require_finite(const std::vector<double>& values, const char* name,
                           const StratumId& id) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InputError("stratum '" + id + "': non-finite value in " + name);
    }
  }
}

inline double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double a : v) sum += a;
  return sum / static_cast<double>(v.size());
}

inline double comoment(const std::vector<double>& a, double mean_a, const std::vector<double>& b,
                       double mean_b) {
  if (a.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - mean_a) * (b[i] - mean_b);
  return sum / static_cast<double>(a.size() - 1);
}

}  // namespace detail

/// Population moments of a unit frame with sample size n attached.
/// A single-unit frame has all variances and covariances equal to 0.
inline StratumSummary summarize_stratum(const UnitFrame& units, Count n) {
  const auto N = units.size();
  if (N == 0) throw InputError("stratum '" + units.stratum_id + "': empty unit frame");
  if (units.x.size() != N || units.z.size() != N) {
    throw InputError("stratum '" + units.stratum_id + "': y, x, z have different lengths");
  }
  if (n < 1 || n > static_cast<Count>(N)) {
    throw InputError("stratum '" + units.stratum_id + "': sample size " + std::to_string(n) +
                     " outside [1, " + std::to_string(N) + "]");
  }
  detail::require_finite(units.y, "y", units.stratum_id);
  detail::require_finite(units.x, "x", units.stratum_id);
  detail::require_finite(units.z, "z", units.stratum_id);

  StratumSummary s;
  s.stratum_id = units.stratum_id;
  s.N = static_cast<Count>(N);
  s.n = n;
  s.mean_y = detail::mean_of(units.y);
  s.mean_x = detail::mean_of(units.x);
  s.mean_z = detail::mean_of(units.z);
  s.s_y = std::sqrt(detail::comoment(units.y, s.mean_y, units.y, s.mean_y));
  s.s_x = std::sqrt(detail::comoment(units.x, s.mean_x, units.x, s.mean_x));
  s.s_z = std::sqrt(detail::comoment(units.z, s.mean_z, units.z, s.mean_z));
  s.s_xy = detail::comoment(units.x, s.mean_x, units.y, s.mean_y);
  s.s_yz = detail::comoment(units.y, s.mean_y, units.z, s.mean_z);
  s.s_xz = detail::comoment(units.x, s.mean_x, units.z, s.mean_z);
  return s;
}

/// Builds the population summary. Sizes are taken as given: n > N is
/// accepted here so that validate() can report it.
inline PopulationSummary combine(std::vector<StratumSummary> strata) {
  if (strata.empty()) throw InputError("population has no strata");

  std::unordered_set<StratumId> seen;
  Count total = 0;
  for (const auto& s : strata) {
    if (!seen.insert(s.stratum_id).second) {
      throw InputError("duplicate stratum_id '" + s.stratum_id + "'");
    }
    if (s.N <= 0) throw InputError("stratum '" + s.stratum_id + "': N must be positive");
    if (s.n <= 0) throw InputError("stratum '" + s.stratum_id + "': n must be positive");
    total += s.N;
  }

  PopulationSummary pop;
  pop.total_N_ = total;
  pop.weights_.reserve(strata.size());
  const auto N_total = static_cast<double>(total);
  for (const auto& s : strata) {
    StratumWeights sw;
    const auto N = static_cast<double>(s.N);
    const auto n = static_cast<double>(s.n);
    sw.w = N / N_total;
    sw.f = n / N;
    sw.gamma = static_cast<double>(s.N - s.n) / (N * n);
    if (s.n < s.N) sw.g = n / static_cast<double>(s.N - s.n);
    pop.means_.y += sw.w * s.mean_y;
    pop.means_.x += sw.w * s.mean_x;
    pop.means_.z += sw.w * s.mean_z;
    pop.weights_.push_back(sw);
  }
  pop.strata_ = std::move(strata);
  return pop;
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { warning, error };

struct Finding {
  Severity severity = Severity::warning;
  std::optional<StratumId> stratum;  // empty for population-wide findings
  std::string code;
  std::string message;
};

enum class Corrections { off, auto_repair };

struct ValidationReport {
  std::vector<Finding> findings;
  /// Present when corrections were enabled, at least one repair was made
  /// and every error-severity finding was repaired.
  std::optional<PopulationSummary> corrected;

  bool has_errors() const {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::error; });
  }
  /// Downstream computation must stop.
  bool blocking() const { return has_errors() && !corrected.has_value(); }
};

namespace detail {

inline constexpr double kCauchySchwarzRelTol = 1e-9;
inline constexpr double kRhoTolerance = 0.005;

inline bool within_cauchy_schwarz(double cov, double bound) {
  return std::abs(cov) <= bound * (1.0 + kCauchySchwarzRelTol);
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace detail

/// Reports impossible or inconsistent summary statistics. With
/// corrections enabled, a covariance whose implied |rho| exceeds 1 is
/// divided by 10 once (a decimal-shift repair) and re-checked.
inline ValidationReport validate(const PopulationSummary& pop, Corrections corrections) {
  ValidationReport report;
  std::vector<StratumSummary> repaired = pop.strata();
  bool any_repair = false;
  bool unrepaired_error = false;

  auto add = [&](Severity sev, const StratumId& id, std::string code, std::string msg) {
    report.findings.push_back({sev, id, std::move(code), std::move(msg)});
    if (sev == Severity::error) unrepaired_error = true;
  };

  for (std::size_t h = 0; h < pop.num_strata(); ++h) {
    const auto& s = pop.stratum(h);
    auto& fixed = repaired[h];

    if (s.n > s.N) {
      add(Severity::error, s.stratum_id, "sample_exceeds_population",
          "n = " + std::to_string(s.n) + " exceeds N = " + std::to_string(s.N));
    }

    bool sd_ok = true;
    for (auto [name, value] : {std::pair{"s_y", s.s_y}, {"s_x", s.s_x}, {"s_z", s.s_z}}) {
      if (!std::isfinite(value) || value < 0.0) {
        add(Severity::error, s.stratum_id, "negative_sd",
            std::string(name) + " = " + detail::fmt(value) + " is not a non-negative number");
        sd_ok = false;
      }
    }
    if (!sd_ok) continue;

    for (Pair p : kAllPairs) {
      const double cov = s.covariance(p);
      const double bound = s.sd_product(p);
      const std::string cov_name = std::string("s_") + pair_name(p);
      if (!std::isfinite(cov)) {
        add(Severity::error, s.stratum_id, "non_finite", cov_name + " is not finite");
        continue;
      }
      if (!detail::within_cauchy_schwarz(cov, bound)) {
        const std::string msg = "implied |rho_" + std::string(pair_name(p)) + "| > 1 (" +
                                cov_name + " = " + detail::fmt(cov) + ", bound " +
                                detail::fmt(bound) + ")";
        if (corrections == Corrections::auto_repair &&
            detail::within_cauchy_schwarz(cov / 10.0, bound)) {
          report.findings.push_back({Severity::error, s.stratum_id, "cauchy_schwarz", msg});
          const double shifted = cov / 10.0;
          fixed.covariance(p) = shifted;
          any_repair = true;
          std::string repair = cov_name + ": " + detail::fmt(cov) + " -> " + detail::fmt(shifted);
          if (bound > 0.0) repair += " (implied rho = " + detail::fmt(shifted / bound) + ")";
          report.findings.push_back(
              {Severity::warning, s.stratum_id, "decimal_shift_repair", std::move(repair)});
        } else {
          add(Severity::error, s.stratum_id, "cauchy_schwarz", msg);
        }
      }

      const auto& rho = s.published_rho(p);
      if (rho && bound > 0.0) {
        const double implied = fixed.covariance(p) / bound;
        if (std::abs(*rho - implied) > detail::kRhoTolerance) {
          add(Severity::warning, s.stratum_id, "correlation_mismatch",
              "published rho_" + std::string(pair_name(p)) + " = " + detail::fmt(*rho) +
                  " but covariance implies " + detail::fmt(implied));
        }
      }
    }
  }

  if (any_repair && !unrepaired_error) report.corrected = combine(std::move(repaired));
  return report;
}

// ---------------------------------------------------------------------------
// Neyman allocation

struct AllocationInput {
  Count N = 0;
  double s_y = 0.0;
};

enum class Rounding {
  largest_remainder,  // Hamilton: floor the shares, hand out the rest by largest remainder
  sainte_lague,       // highest averages with divisors 2n + 1, starting from one unit each
};

/// Sample sizes n_h proportional to N_h * S_yh with 1 <= n_h <= N_h and
/// sum n_total. Strata whose share falls outside the bounds are pinned and
/// the remainder is re-shared among the others.
inline std::vector<Count> neyman_allocation(std::span<const AllocationInput> strata, Count n_total,
                                            Rounding rounding = Rounding::largest_remainder) {
  const auto L = static_cast<Count>(strata.size());
  if (L == 0) throw InputError("neyman_allocation: no strata");
  Count capacity = 0;
  bool any_positive = false;
  for (const auto& s : strata) {
    if (s.N < 1) throw InputError("neyman_allocation: stratum size must be positive");
    if (!(s.s_y >= 0.0) || !std::isfinite(s.s_y)) {
      throw InputError("neyman_allocation: standard deviations must be finite and non-negative");
    }
    any_positive = any_positive || s.s_y > 0.0;
    capacity += s.N;
  }
  if (!any_positive) throw InputError("neyman_allocation: every s_y is zero");
  if (n_total < L || n_total > capacity) {
    throw InputError("neyman_allocation: n_total = " + std::to_string(n_total) +
                     " infeasible for " + std::to_string(L) + " strata of total size " +
                     std::to_string(capacity));
  }

  auto weight = [&](std::size_t h) { return static_cast<double>(strata[h].N) * strata[h].s_y; };
  std::vector<Count> out(strata.size(), 0);

  if (rounding == Rounding::sainte_lague) {
    std::fill(out.begin(), out.end(), Count{1});
    for (Count seat = L; seat < n_total; ++seat) {
      std::size_t best = strata.size();
      double best_priority = -1.0;
      for (std::size_t h = 0; h < strata.size(); ++h) {
        if (out[h] >= strata[h].N) continue;
        const double priority = weight(h) / static_cast<double>(2 * out[h] + 1);
        if (priority > best_priority) {
          best_priority = priority;
          best = h;
        }
      }
      ++out[best];
    }
    return out;
  }

  // Pin strata whose continuous share leaves [1, N_h]; upper bounds first.
  std::vector<std::optional<Count>> pinned(strata.size());
  std::vector<double> share(strata.size(), 0.0);
  for (;;) {
    Count remaining = n_total;
    double free_weight = 0.0;
    std::size_t free_count = 0;
    for (std::size_t h = 0; h < strata.size(); ++h) {
      if (pinned[h]) {
        remaining -= *pinned[h];
      } else {
        free_weight += weight(h);
        ++free_count;
      }
    }
    if (free_count == 0) break;
    for (std::size_t h = 0; h < strata.size(); ++h) {
      if (pinned[h]) continue;
      share[h] = free_weight > 0.0
                     ? static_cast<double>(remaining) * weight(h) / free_weight
                     : static_cast<double>(remaining) / static_cast<double>(free_count);
    }
    bool changed = false;
    for (std::size_t h = 0; h < strata.size(); ++h) {
      if (!pinned[h] && share[h] > static_cast<double>(strata[h].N)) {
        pinned[h] = strata[h].N;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t h = 0; h < strata.size(); ++h) {
        if (!pinned[h] && share[h] < 1.0) {
          pinned[h] = 1;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  Count assigned = 0;
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t h = 0; h < strata.size(); ++h) {
    if (pinned[h]) {
      out[h] = *pinned[h];
    } else {
      out[h] = static_cast<Count>(std::floor(share[h]));
      remainders.emplace_back(share[h] - static_cast<double>(out[h]), h);
    }
    assigned += out[h];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (auto it = remainders.begin(); assigned < n_total && it != remainders.end(); ++it) {
    if (out[it->second] < strata[it->second].N) {
      ++out[it->second];
      ++assigned;
    }
  }
  return out;
}

}  // namespace stratest
