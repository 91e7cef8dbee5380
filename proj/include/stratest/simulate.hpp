#pragma once

// Monte Carlo validation of the first-order MSE theory.
//
// Random streams: every stream is a std::mt19937_64 seeded with
// splitmix64-mixed (seed, domain, index). Stratum h of a generated
// population uses (seed, kPopulationStream, h); replication r of a Monte
// Carlo run uses (seed, kReplicationStream, r). Replications therefore
// depend only on their index and can run in any order or in parallel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"
#include "stratest/estimators.hpp"
#include "stratest/moments.hpp"
#include "stratest/mse_theory.hpp"

namespace stratest {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kPopulationStream = 1;
inline constexpr std::uint64_t kReplicationStream = 2;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  return Rng(splitmix64(seed ^ splitmix64(domain ^ splitmix64(index))));
}

// ---------------------------------------------------------------------------
// Synthetic populations

/// Target moments of one generated stratum. Vectors are ordered (y, x, z).
struct StratumSpec {
  StratumId stratum_id;
  Count N = 0;
  std::array<double, 3> mean{};
  std::array<double, 3> sd{};
  double rho_xy = 0.0;
  double rho_yz = 0.0;
  double rho_xz = 0.0;
};

struct PopulationSpec {
  std::vector<StratumSpec> strata;
  std::uint64_t seed = 0;
};

namespace detail {

inline constexpr double kPsdTolerance = 1e-12;

/// Lower Cholesky factor of the (y, x, z) correlation matrix. Works for
/// semidefinite matrices: a vanishing pivot zeroes its column.
inline std::array<std::array<double, 3>, 3> correlation_cholesky(const StratumSpec& s) {
  for (double r : {s.rho_xy, s.rho_yz, s.rho_xz}) {
    if (!std::isfinite(r) || std::abs(r) > 1.0) {
      throw InputError("stratum '" + s.stratum_id + "': correlation outside [-1, 1]");
    }
  }
  const double det = 1.0 + 2.0 * s.rho_xy * s.rho_yz * s.rho_xz - s.rho_xy * s.rho_xy -
                     s.rho_yz * s.rho_yz - s.rho_xz * s.rho_xz;
  if (det < -kPsdTolerance) {
    throw InputError("stratum '" + s.stratum_id +
                     "': correlation matrix is not positive semidefinite (determinant " +
                     detail::shortest(det) + ")");
  }
  std::array<std::array<double, 3>, 3> L{};
  L[0][0] = 1.0;
  L[1][0] = s.rho_xy;
  L[1][1] = std::sqrt(std::max(0.0, 1.0 - L[1][0] * L[1][0]));
  L[2][0] = s.rho_yz;
  L[2][1] = L[1][1] > 1e-12 ? (s.rho_xz - L[2][0] * L[1][0]) / L[1][1] : 0.0;
  const double rest = 1.0 - L[2][0] * L[2][0] - L[2][1] * L[2][1];
  if (rest < -1e-9) {
    throw InputError("stratum '" + s.stratum_id +
                     "': correlation matrix is not positive semidefinite");
  }
  L[2][2] = std::sqrt(std::max(0.0, rest));
  return L;
}

}  // namespace detail

/// Trivariate Gaussian units for every stratum, deterministic in the seed.
inline std::vector<UnitFrame> generate_population(const PopulationSpec& spec) {
  if (spec.strata.empty()) throw InputError("population spec has no strata");
  std::vector<UnitFrame> frames;
  frames.reserve(spec.strata.size());
  for (std::size_t h = 0; h < spec.strata.size(); ++h) {
    const auto& s = spec.strata[h];
    if (s.N < 1) throw InputError("stratum '" + s.stratum_id + "': N must be positive");
    for (double sd : s.sd) {
      if (!(sd >= 0.0) || !std::isfinite(sd)) {
        throw InputError("stratum '" + s.stratum_id + "': standard deviations must be >= 0");
      }
    }
    const auto L = detail::correlation_cholesky(s);
    Rng rng = make_stream(spec.seed, kPopulationStream, h);
    std::normal_distribution<double> normal(0.0, 1.0);

    UnitFrame f;
    f.stratum_id = s.stratum_id;
    const auto N = static_cast<std::size_t>(s.N);
    f.y.resize(N);
    f.x.resize(N);
    f.z.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double e0 = normal(rng);
      const double e1 = normal(rng);
      const double e2 = normal(rng);
      const double uy = L[0][0] * e0;
      const double ux = L[1][0] * e0 + L[1][1] * e1;
      const double uz = L[2][0] * e0 + L[2][1] * e1 + L[2][2] * e2;
      f.y[i] = s.mean[0] + s.sd[0] * uy;
      f.x[i] = s.mean[1] + s.sd[1] * ux;
      f.z[i] = s.mean[2] + s.sd[2] * uz;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Sampling

/// Unit frames with a sampling design attached. The realized summary of
/// the frames (not any generator target) is the ground truth.
class FinitePopulation {
 public:
  FinitePopulation(std::vector<UnitFrame> frames, const std::vector<Count>& design)
      : frames_(std::move(frames)), summary_(summarize(frames_, design)) {}

  const std::vector<UnitFrame>& frames() const { return frames_; }
  const PopulationSummary& summary() const { return summary_; }
  Count sample_size(std::size_t h) const { return summary_.stratum(h).n; }

 private:
  static PopulationSummary summarize(const std::vector<UnitFrame>& frames,
                                     const std::vector<Count>& design) {
    if (frames.size() != design.size()) {
      throw InputError("design has " + std::to_string(design.size()) + " sample sizes for " +
                       std::to_string(frames.size()) + " strata");
    }
    std::vector<StratumSummary> strata;
    strata.reserve(frames.size());
    for (std::size_t h = 0; h < frames.size(); ++h) {
      strata.push_back(summarize_stratum(frames[h], design[h]));
    }
    return combine(std::move(strata));
  }

  std::vector<UnitFrame> frames_;
  PopulationSummary summary_;
};

/// n distinct indices from [0, N), uniform over subsets, in increasing
/// order (Floyd's algorithm).
inline std::vector<std::size_t> srswor_indices(std::size_t N, std::size_t n, Rng& rng) {
  if (n < 1 || n > N) {
    throw InputError("sample size " + std::to_string(n) + " outside [1, " + std::to_string(N) +
                     "]");
  }
  std::vector<char> chosen(N, 0);
  for (std::size_t j = N - n; j < N; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    chosen[chosen[t] ? j : t] = 1;
  }
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < N; ++i) {
    if (chosen[i]) out.push_back(i);
  }
  return out;
}

/// One stratified SRSWOR sample, independent across strata. Units are
/// summed in index order so a census reproduces the population means bit
/// for bit.
inline SampleMeans draw_sample(const FinitePopulation& pop, Rng& rng) {
  const auto L = pop.frames().size();
  std::vector<double> ybar(L), xbar(L), zbar(L);
  for (std::size_t h = 0; h < L; ++h) {
    const auto& f = pop.frames()[h];
    const auto n = static_cast<std::size_t>(pop.sample_size(h));
    double sy = 0.0, sx = 0.0, sz = 0.0;
    for (std::size_t i : srswor_indices(f.size(), n, rng)) {
      sy += f.y[i];
      sx += f.x[i];
      sz += f.z[i];
    }
    const auto dn = static_cast<double>(n);
    ybar[h] = sy / dn;
    xbar[h] = sx / dn;
    zbar[h] = sz / dn;
  }
  return SampleMeans(pop.summary(), std::move(ybar), std::move(xbar), std::move(zbar));
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct EstimatorResult {
  EstimatorSpec spec;
  Count replications = 0;
  Count rejected = 0;
  Count accepted = 0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // divisor = accepted
  double mse = 0.0;
  double mse_theory = 0.0;
  std::optional<double> ratio;  // mse / mse_theory, when mse_theory > 0
};

/// Empirical check that the combined dual transform x*_st is unbiased for X.
struct TransformCheck {
  double target = 0.0;
  double mean = 0.0;
  double standard_error = 0.0;
};

struct SimResult {
  double true_mean = 0.0;
  Count replications = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorResult> rows;
  std::optional<TransformCheck> xstar;
};

/// R independent stratified samples evaluated under every spec. Draws that
/// make an estimator undefined are counted as rejected and excluded.
/// threads = 0 uses the hardware concurrency; the result does not depend on it.
inline SimResult monte_carlo(const FinitePopulation& pop, const std::vector<EstimatorSpec>& specs,
                             Count R, std::uint64_t seed, unsigned threads = 1) {
  if (R < 1) throw InputError("monte_carlo: R must be at least 1");
  if (specs.empty()) throw InputError("monte_carlo: no estimators");

  const auto& summary = pop.summary();
  const auto& means = summary.means();
  const bool dual_ok = !summary.has_census_stratum();
  const MomentSet m = compute_moments(summary);
  std::optional<DualMomentSet> dual;
  if (dual_ok) dual = compute_dual_moments(summary);
  for (const auto& spec : specs) {
    check_spec(spec, means);
    if (is_dual(spec.kind) && !dual_ok) {
      throw DegenerateError(to_string(spec) + " is undefined for a design with a census stratum");
    }
  }

  const std::size_t S = specs.size();
  const auto reps = static_cast<std::size_t>(R);
  std::vector<double> values(reps * S);
  std::vector<double> xstar(dual_ok ? reps : 0);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng = make_stream(seed, kReplicationStream, r);
      const SampleMeans sample = draw_sample(pop, rng);
      for (std::size_t s = 0; s < S; ++s) {
        double v;
        try {
          v = estimate(specs[s], sample, summary);
          if (!std::isfinite(v)) v = std::nan("");
        } catch (const DegenerateSample&) {
          v = std::nan("");
        }
        values[r * S + s] = v;
      }
      if (dual_ok) xstar[r] = dual_transform_means(sample, summary).xstar_st;
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));
  if (threads <= 1) {
    run_range(0, reps);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (reps + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(reps, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  SimResult result;
  result.true_mean = means.y;
  result.replications = R;
  result.seed = seed;
  for (std::size_t s = 0; s < S; ++s) {
    EstimatorResult row;
    row.spec = specs[s];
    row.replications = R;
    // Aggregated as deviations from the true mean, so a census (every
    // value equal to Y) gives exactly zero bias, variance and MSE.
    double dev_sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = values[r * S + s];
      if (std::isnan(v)) {
        ++row.rejected;
      } else {
        ++row.accepted;
        dev_sum += v - means.y;
      }
    }
    if (row.accepted == 0) {
      throw DegenerateError("monte_carlo: every draw was rejected for " + to_string(specs[s]));
    }
    const auto acc = static_cast<double>(row.accepted);
    row.bias = dev_sum / acc;
    row.mean = means.y + row.bias;
    double ss_mean = 0.0, ss_true = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = values[r * S + s];
      if (std::isnan(v)) continue;
      const double dev = v - means.y;
      ss_mean += (dev - row.bias) * (dev - row.bias);
      ss_true += dev * dev;
    }
    row.variance = ss_mean / acc;
    row.mse = ss_true / acc;
    row.mse_theory = mse_first_order(specs[s], means, m, dual).mse;
    if (row.mse_theory > 0.0) row.ratio = row.mse / row.mse_theory;
    result.rows.push_back(row);
  }

  if (dual_ok) {
    TransformCheck check;
    check.target = means.x;
    double sum = 0.0;
    for (double v : xstar) sum += v;
    check.mean = sum / static_cast<double>(reps);
    double ss = 0.0;
    for (double v : xstar) ss += (v - check.mean) * (v - check.mean);
    check.standard_error =
        reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
    result.xstar = check;
  }
  return result;
}

}  // namespace stratest
