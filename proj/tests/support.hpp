#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "stratest.hpp"

namespace testing_support {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(STRATEST_DATA_DIR) / name;
}

inline stratest::PopulationSummary table1() {
  return stratest::combine(
      stratest::parse_summary_csv(stratest::read_file(data_path("table1_corrected.csv"))));
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Random valid stratum summary built from unit data, so every
/// Cauchy-Schwarz bound holds.
inline stratest::StratumSummary random_stratum(std::mt19937_64& rng, const std::string& id,
                                               bool allow_census = false) {
  std::uniform_int_distribution<int> size(3, 40);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.2, 0.95);
  const int N = size(rng);
  std::uniform_int_distribution<int> sample(1, allow_census ? N : N - 1);
  const double rho = unit(rng);
  const double mx = 50 + 50 * unit(rng), my = 20 + 30 * unit(rng), mz = 10 + 10 * unit(rng);
  stratest::UnitFrame f{id, {}, {}, {}};
  for (int i = 0; i < N; ++i) {
    const double e0 = normal(rng), e1 = normal(rng), e2 = normal(rng);
    f.y.push_back(my + 3 * e0);
    f.x.push_back(mx + 6 * (rho * e0 + std::sqrt(1 - rho * rho) * e1));
    f.z.push_back(mz + 2 * (0.5 * e0 - 0.4 * e1 + 0.77 * e2));
  }
  return stratest::summarize_stratum(f, sample(rng));
}

inline stratest::PopulationSummary random_population(std::mt19937_64& rng,
                                                     bool allow_census = false) {
  std::uniform_int_distribution<int> strata(1, 6);
  const int L = strata(rng);
  std::vector<stratest::StratumSummary> out;
  for (int h = 0; h < L; ++h) out.push_back(random_stratum(rng, "s" + std::to_string(h), allow_census));
  return stratest::combine(std::move(out));
}

/// Random moment sets satisfying the Cauchy-Schwarz constraints, built as
/// Gram matrices of random vectors. The dual set shares the y vector.
inline std::pair<stratest::MomentSet, stratest::DualMomentSet> random_moment_sets(
    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  // rows: y, x, z, x', z'
  std::array<std::array<double, 4>, 5> v{};
  for (std::size_t r = 0; r < v.size(); ++r) {
    for (auto& e : v[r]) e = normal(rng) * (r < 3 ? 0.1 : 0.03);
  }
  auto dot = [&](int a, int b) {
    double s = 0;
    for (int k = 0; k < 4; ++k) s += v[a][k] * v[b][k];
    return s;
  };
  stratest::MomentSet m{dot(0, 0), dot(1, 1), dot(2, 2), dot(0, 1), dot(0, 2), dot(1, 2)};
  stratest::DualMomentSet d{dot(0, 0), dot(3, 3), dot(4, 4), dot(0, 3), dot(0, 4), dot(3, 4)};
  return {m, d};
}

}  // namespace testing_support
