#pragma once

// Command workflows behind the CLI. Each command turns a RunConfig into a
// Table (plus, for some, a JSON document) without touching stdout, so the
// same code paths are exercised by tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"
#include "stratest/estimators.hpp"
#include "stratest/io.hpp"
#include "stratest/moments.hpp"
#include "stratest/mse_theory.hpp"
#include "stratest/report.hpp"
#include "stratest/simulate.hpp"

namespace stratest {

struct SweepGrid {
  double start = 0.8;
  double stop = 2.4;
  double step = 0.1;
  std::vector<double> values;  // explicit list; overrides start/stop/step when nonempty
};

struct SimulationBlock {
  std::string spec_path;
  std::optional<Count> replications;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct RunConfig {
  std::string input;
  Schema schema = Schema::summary;
  Corrections corrections = Corrections::off;
  UnitDesign design;
  std::vector<std::string> estimators;
  SweepGrid sweep;
  SimulationBlock simulation;
  std::string output_dir;
  Format format = Format::text;
  bool full_precision = false;
};

struct CommandOutput {
  Table table;
  std::optional<nlohmann::json> document;  // replaces the table for --format json
  bool failed = false;                     // maps to a nonzero exit status
};

inline void check_grid(const SweepGrid& grid) {
  if (!grid.values.empty()) return;
  if (!(grid.step > 0.0)) throw InputError("sweep step must be positive");
  if (!(grid.start <= grid.stop)) throw InputError("sweep start must not exceed stop");
}

inline std::vector<double> grid_points(const SweepGrid& grid) {
  check_grid(grid);
  if (!grid.values.empty()) return grid.values;
  const auto count =
      static_cast<std::size_t>(std::floor((grid.stop - grid.start) / grid.step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(grid.start + static_cast<double>(i) * grid.step);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inputs

struct TheoryInput {
  MomentDocument theory;
  std::optional<LoadedPopulation> population;  // absent for direct moment input
};

inline TheoryInput load_theory_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw InputError("no input given (--input)");
  TheoryInput in;
  if (cfg.schema == Schema::moments) {
    in.theory = parse_moment_document(read_file(cfg.input));
    return in;
  }
  in.population = load_population(cfg.input, cfg.schema, cfg.corrections, cfg.design);
  in.theory = moment_document(in.population->population);
  return in;
}

inline const DualMomentSet& require_dual(const MomentDocument& doc) {
  if (!doc.dual) {
    throw DegenerateError("dual moments unavailable (census stratum or not supplied)");
  }
  return *doc.dual;
}

/// Estimator tokens: the compact spec form, or "tracy_product:opt" /
/// "transformed_product:opt" / "dual_family:opt" for the closed-form optimum.
inline EstimatorSpec resolve_estimator(std::string_view token, const MomentDocument& doc) {
  const auto colon = token.find(':');
  if (colon != std::string_view::npos && token.substr(colon + 1) == "opt") {
    const auto name = token.substr(0, colon);
    if (name == "tracy_product") {
      return EstimatorSpec::tracy_product(optimize_theta(doc.means, doc.moments).A);
    }
    if (name == "transformed_product") {
      // MSE(y3) is minimized at theta = V110 / V020.
      if (!(doc.moments.v020 > 0.0)) throw DegenerateError("V020 must be positive");
      const double theta = doc.moments.v110 / doc.moments.v020;
      return EstimatorSpec::transformed_product(transform_constant(theta, doc.means.x));
    }
    if (name == "dual_family") {
      const auto opt = optimize_alphas(require_dual(doc), doc.means);
      return EstimatorSpec::dual_family(opt.alpha1, opt.alpha2);
    }
    throw InputError("no closed-form optimum for '" + std::string(name) + "'");
  }
  return parse_spec(token);
}

inline std::string display_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::classical: return "y_st";
    case EstimatorKind::combined_ratio: return "y1";
    case EstimatorKind::combined_product: return "y2";
    case EstimatorKind::transformed_product: return "y3";
    case EstimatorKind::ratio_cum_product: return "y5";
    case EstimatorKind::tracy_product: return "y7";
    case EstimatorKind::plikusas_dual: return "y8";
    case EstimatorKind::dual_family: return "y9";
  }
  return "?";
}

inline std::string display_name(std::string_view token, const EstimatorSpec& spec) {
  auto name = display_name(spec.kind);
  if (token.size() > 4 && token.substr(token.size() - 4) == ":opt") name += " (opt)";
  return name;
}

inline std::optional<double> finite_or_empty(std::optional<double> v) {
  if (v && std::isfinite(*v)) return v;
  return std::nullopt;
}

inline Cell cell(std::optional<double> v) {
  if (v) return *v;
  return std::monostate{};
}

// ---------------------------------------------------------------------------
// validate

inline std::vector<Finding> validate_moments(const MomentDocument& doc) {
  std::vector<Finding> out;
  auto err = [&](std::string code, std::string msg) {
    out.push_back({Severity::error, std::nullopt, std::move(code), std::move(msg)});
  };
  const auto& m = doc.moments;
  if (m.v200 < 0 || m.v020 < 0 || m.v002 < 0) err("negative_moment", "V200, V020, V002 must be >= 0");
  if (m.v110 * m.v110 > m.v200 * m.v020 * (1 + 1e-9)) err("cauchy_schwarz", "V110^2 > V200 V020");
  if (m.v101 * m.v101 > m.v200 * m.v002 * (1 + 1e-9)) err("cauchy_schwarz", "V101^2 > V200 V002");
  if (m.v011 * m.v011 > m.v020 * m.v002 * (1 + 1e-9)) err("cauchy_schwarz", "V011^2 > V020 V002");
  if (doc.dual) {
    const auto& d = *doc.dual;
    if (d.v020 < 0 || d.v002 < 0) err("negative_moment", "V'020, V'002 must be >= 0");
    if (d.v200 != m.v200) {
      out.push_back({Severity::warning, std::nullopt, "dual_v200_mismatch",
                     "V'200 differs from V200"});
    }
  }
  return out;
}

inline CommandOutput cmd_validate(const RunConfig& cfg) {
  CommandOutput out;
  out.table.title = "Validation findings";
  out.table.columns = {{"severity", ColumnType::text},
                       {"stratum", ColumnType::text},
                       {"code", ColumnType::text},
                       {"message", ColumnType::text}};
  std::vector<Finding> findings;
  bool blocking = false;
  bool repaired = false;
  if (cfg.schema == Schema::moments) {
    findings = validate_moments(parse_moment_document(read_file(cfg.input)));
    blocking = std::any_of(findings.begin(), findings.end(),
                           [](const Finding& f) { return f.severity == Severity::error; });
  } else {
    PopulationSummary pop =
        cfg.schema == Schema::summary
            ? combine(parse_summary_csv(read_file(cfg.input)))
            : summarize_units(parse_units_csv(read_file(cfg.input)), cfg.design);
    auto report = validate(pop, cfg.corrections);
    findings = report.findings;
    blocking = report.blocking();
    repaired = report.corrected.has_value();
  }
  for (const auto& f : findings) {
    out.table.add_row({std::string(f.severity == Severity::error ? "error" : "warning"),
                       f.stratum ? Cell(*f.stratum) : Cell(std::monostate{}), f.code, f.message});
  }
  out.table.notes.push_back(findings.empty() ? "no findings"
                            : blocking       ? "status: FAILED (unrepaired errors)"
                            : repaired       ? "status: ok after corrections"
                                             : "status: ok");
  out.failed = blocking;
  return out;
}

// ---------------------------------------------------------------------------
// moments

inline CommandOutput cmd_moments(const RunConfig& cfg) {
  const auto in = load_theory_input(cfg);
  const auto& doc = in.theory;
  CommandOutput out;
  out.table.title = "Moment functionals";
  out.table.columns = {{"set", ColumnType::text},  {"v200", ColumnType::real},
                       {"v020", ColumnType::real}, {"v002", ColumnType::real},
                       {"v110", ColumnType::real}, {"v101", ColumnType::real},
                       {"v011", ColumnType::real}};
  const auto& m = doc.moments;
  out.table.add_row({std::string("V"), m.v200, m.v020, m.v002, m.v110, m.v101, m.v011});
  if (doc.dual) {
    const auto& d = *doc.dual;
    out.table.add_row({std::string("V'"), d.v200, d.v020, d.v002, d.v110, d.v101, d.v011});
  }
  out.table.notes.push_back("Y = " + format_number(doc.means.y, kFullDigits) +
                            ", X = " + format_number(doc.means.x, kFullDigits) +
                            ", Z = " + format_number(doc.means.z, kFullDigits));
  out.table.notes.push_back("Var(y_st) = Y^2 V200 = " +
                            format_number(var_yst(doc.means, m), kFullDigits));
  out.document = to_json(doc);
  return out;
}

// ---------------------------------------------------------------------------
// mse

inline json to_json(const MseReport& r) {
  json j{{"estimator", to_string(r.estimator)}, {"mse", r.mse}};
  j["pre"] = r.pre ? json(*r.pre) : json(nullptr);
  if (const auto* t = std::get_if<ThetaOptimum>(&r.optimal_params)) {
    j["optimal"] = {{"theta", t->theta}, {"A", t->A}, {"mse_min", t->mse_min}};
  } else if (const auto* a = std::get_if<AlphaOptimum>(&r.optimal_params)) {
    j["optimal"] = {{"alpha1", a->alpha1}, {"alpha2", a->alpha2}, {"mse_min", a->mse_min}};
  }
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

inline const std::vector<std::string>& default_mse_estimators() {
  static const std::vector<std::string> list = {
      "classical",     "combined_ratio",  "combined_product", "ratio_cum_product",
      "plikusas_dual", "tracy_product:opt", "dual_family:opt"};
  return list;
}

inline CommandOutput cmd_mse(const RunConfig& cfg) {
  const auto in = load_theory_input(cfg);
  const auto& doc = in.theory;
  const auto& tokens = cfg.estimators.empty() ? default_mse_estimators() : cfg.estimators;

  CommandOutput out;
  out.table.title = "First-order MSE";
  out.table.columns = {{"estimator", ColumnType::text},
                       {"params", ColumnType::text},
                       {"MSE", ColumnType::real},
                       {"PRE", ColumnType::real}};
  json reports = json::array();
  for (const auto& token : tokens) {
    const auto spec = resolve_estimator(token, doc);
    auto report = mse_first_order(spec, doc.means, doc.moments, doc.dual);
    if (spec.kind == EstimatorKind::tracy_product && token.ends_with(":opt")) {
      report.optimal_params = optimize_theta(doc.means, doc.moments);
    } else if (spec.kind == EstimatorKind::dual_family && token.ends_with(":opt")) {
      report.optimal_params = optimize_alphas(require_dual(doc), doc.means);
    }
    out.table.add_row({display_name(token, spec), to_string(spec), report.mse, cell(report.pre)});
    for (const auto& w : report.warnings) out.table.notes.push_back("warning: " + w);
    reports.push_back(to_json(report));
  }
  out.table.notes.push_back("Var(y_st) = " +
                            format_number(var_yst(doc.means, doc.moments), kFullDigits));
  out.document = json{{"var_yst", var_yst(doc.means, doc.moments)}, {"reports", reports}};
  return out;
}

// ---------------------------------------------------------------------------
// pre

inline const std::vector<std::string>& default_pre_estimators() {
  static const std::vector<std::string> list = {"classical", "combined_ratio", "ratio_cum_product",
                                                "plikusas_dual", "dual_family:opt"};
  return list;
}

/// Nominal exponents shown in the alpha columns of the efficiency table.
inline std::pair<std::optional<double>, std::optional<double>> nominal_alphas(
    const EstimatorSpec& spec) {
  switch (spec.kind) {
    case EstimatorKind::classical: return {0.0, 0.0};
    case EstimatorKind::combined_ratio: return {1.0, 0.0};
    case EstimatorKind::ratio_cum_product:
    case EstimatorKind::plikusas_dual: return {1.0, 1.0};
    case EstimatorKind::dual_family: return {spec.alpha1, spec.alpha2};
    default: return {std::nullopt, std::nullopt};
  }
}

inline CommandOutput cmd_pre_from(const MomentDocument& doc, const std::vector<std::string>& list) {
  const auto& tokens = list.empty() ? default_pre_estimators() : list;
  const double baseline = var_yst(doc.means, doc.moments);
  CommandOutput out;
  out.table.title = "Percent relative efficiency";
  out.table.columns = {{"estimator", ColumnType::text},
                       {"alpha1", ColumnType::real},
                       {"alpha2", ColumnType::real},
                       {"PRE", ColumnType::real}};
  for (const auto& token : tokens) {
    const auto spec = resolve_estimator(token, doc);
    const auto report = mse_first_order(spec, doc.means, doc.moments, doc.dual);
    const auto [a1, a2] = nominal_alphas(spec);
    out.table.add_row({display_name(token, spec), cell(a1), cell(a2), pre(report, baseline)});
  }
  return out;
}

inline CommandOutput cmd_pre(const RunConfig& cfg) {
  return cmd_pre_from(load_theory_input(cfg).theory, cfg.estimators);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  double theta = 0.0;
  double A = 0.0;
  double mse = 0.0;
  bool optimum = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by theta; includes the optimum row
  double var_yst = 0.0;
  std::optional<ThetaInterval> beneficial;
};

inline SweepResult sweep_theta(const MomentDocument& doc, const SweepGrid& grid) {
  const auto points = grid_points(grid);
  SweepResult out;
  out.var_yst = var_yst(doc.means, doc.moments);
  out.beneficial = beneficial_theta_range(doc.moments);
  for (double theta : points) {
    if (theta == 0.0) throw InputError("sweep grid contains theta = 0 (A undefined)");
    out.rows.push_back({theta, transform_constant(theta, doc.means.x),
                        mse_tracy(doc.means, doc.moments, theta), false});
  }
  const auto opt = optimize_theta(doc.means, doc.moments);
  out.rows.push_back({opt.theta, opt.A, opt.mse_min, true});
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.theta < b.theta; });
  return out;
}

inline CommandOutput cmd_sweep(const RunConfig& cfg) {
  const auto doc = load_theory_input(cfg).theory;
  const auto result = sweep_theta(doc, cfg.sweep);
  CommandOutput out;
  out.table.title = "MSE of the transformed product estimator y7 over theta";
  out.table.columns = {{"theta", ColumnType::real},
                       {"A", ColumnType::real},
                       {"MSE", ColumnType::real},
                       {"vs_var_yst", ColumnType::text},
                       {"note", ColumnType::text}};
  for (const auto& r : result.rows) {
    out.table.add_row({r.theta, r.A, r.mse,
                       std::string(r.mse < result.var_yst ? "<V(y_st)" : ">=V(y_st)"),
                       r.optimum ? Cell(std::string("opt *")) : Cell(std::monostate{})});
  }
  const int digits = cfg.full_precision ? kFullDigits : kDefaultDigits;
  out.table.notes.push_back("V(y_st) = " + format_number(result.var_yst, digits));
  if (result.beneficial) {
    out.table.notes.push_back("theta < " + format_number(result.beneficial->lower, digits) +
                              " or theta > " + format_number(result.beneficial->upper, digits) +
                              ": MSE(y7) > V(y_st)");
  } else {
    out.table.notes.push_back("MSE(y7) >= V(y_st) for every theta");
  }
  out.table.notes.push_back("* minimum MSE at the optimal theta");
  return out;
}

// ---------------------------------------------------------------------------
// optimize

inline CommandOutput cmd_optimize(const RunConfig& cfg) {
  const auto doc = load_theory_input(cfg).theory;
  const double baseline = var_yst(doc.means, doc.moments);
  CommandOutput out;
  out.table.title = "Closed-form optima";
  out.table.columns = {{"quantity", ColumnType::text}, {"value", ColumnType::real}};
  const auto th = optimize_theta(doc.means, doc.moments);
  out.table.add_row({std::string("theta_opt"), th.theta});
  out.table.add_row({std::string("A_opt"), th.A});
  out.table.add_row({std::string("mse_min_y7"), th.mse_min});
  if (th.mse_min > 0.0) out.table.add_row({std::string("pre_y7_opt"), 100.0 * baseline / th.mse_min});
  if (const auto range = beneficial_theta_range(doc.moments)) {
    out.table.add_row({std::string("theta_beneficial_lower"), range->lower});
    out.table.add_row({std::string("theta_beneficial_upper"), range->upper});
  }
  if (doc.dual) {
    const auto al = optimize_alphas(*doc.dual, doc.means);
    out.table.add_row({std::string("alpha1_opt"), al.alpha1});
    out.table.add_row({std::string("alpha2_opt"), al.alpha2});
    out.table.add_row({std::string("mse_min_y9"), al.mse_min});
    if (al.mse_min > 0.0) {
      out.table.add_row({std::string("pre_y9_opt"), 100.0 * baseline / al.mse_min});
    }
    out.table.add_row({std::string("bias_y9_opt"),
                       bias_first_order_dual(*doc.dual, doc.means, al.alpha1, al.alpha2)});
    const auto v = efficiency_conditions(doc.moments, *doc.dual, th.theta, al.alpha1, al.alpha2);
    out.table.add_row({std::string("margin21_at_opt"), v.margin21});
    out.table.add_row({std::string("margin22_at_opt"), v.margin22});
  }
  out.table.add_row({std::string("var_yst"), baseline});
  return out;
}

// ---------------------------------------------------------------------------
// simulate

inline const std::vector<std::string>& default_simulation_estimators() {
  static const std::vector<std::string> list = {"classical", "combined_ratio",
                                                "ratio_cum_product", "plikusas_dual"};
  return list;
}

inline Table sim_table(const SimResult& result) {
  Table t;
  t.title = "Monte Carlo: empirical vs first-order MSE";
  t.columns = {{"estimator", ColumnType::text},   {"params", ColumnType::text},
               {"R", ColumnType::integer},        {"rejected", ColumnType::integer},
               {"mean", ColumnType::real},        {"bias", ColumnType::real},
               {"variance", ColumnType::real},    {"mse_empirical", ColumnType::real},
               {"mse_theory", ColumnType::real},  {"ratio", ColumnType::real}};
  for (const auto& r : result.rows) {
    t.add_row({display_name(r.spec.kind), to_string(r.spec), r.replications, r.rejected, r.mean,
               r.bias, r.variance, r.mse, r.mse_theory, cell(r.ratio)});
  }
  t.notes.push_back("true mean Y = " + format_number(result.true_mean, kFullDigits) +
                    ", R = " + std::to_string(result.replications) +
                    ", seed = " + std::to_string(result.seed));
  if (result.xstar) {
    const auto& c = *result.xstar;
    const double z = c.standard_error > 0 ? (c.mean - c.target) / c.standard_error : 0.0;
    t.notes.push_back("dual transform: mean x*_st = " + format_number(c.mean, kFullDigits) +
                      " vs X = " + format_number(c.target, kFullDigits) + " (" +
                      format_number(z, 3) + " standard errors)");
  }
  return t;
}

inline CommandOutput cmd_simulate(const RunConfig& cfg) {
  const std::string path = !cfg.simulation.spec_path.empty() ? cfg.simulation.spec_path : cfg.input;
  if (path.empty()) throw InputError("simulate needs a population spec (--sim-spec)");
  const auto doc = parse_simulation_document(read_file(path));
  auto spec = doc.population;
  if (cfg.simulation.seed) spec.seed = *cfg.simulation.seed;
  const Count R = cfg.simulation.replications.value_or(doc.replications.value_or(10000));

  const FinitePopulation pop(generate_population(spec), doc.design);
  const auto theory = moment_document(pop.summary());
  std::vector<EstimatorSpec> specs;
  if (!cfg.estimators.empty()) {
    for (const auto& t : cfg.estimators) specs.push_back(resolve_estimator(t, theory));
  } else if (!doc.estimators.empty()) {
    specs = doc.estimators;
  } else {
    for (const auto& t : default_simulation_estimators()) {
      if (is_dual(parse_spec(t).kind) && pop.summary().has_census_stratum()) continue;
      specs.push_back(parse_spec(t));
    }
  }
  const auto result = monte_carlo(pop, specs, R, spec.seed, cfg.simulation.threads);
  CommandOutput out;
  out.table = sim_table(result);
  return out;
}

// ---------------------------------------------------------------------------

inline CommandOutput run_command(std::string_view name, const RunConfig& cfg) {
  if (name == "validate") return cmd_validate(cfg);
  if (name == "moments") return cmd_moments(cfg);
  if (name == "mse") return cmd_mse(cfg);
  if (name == "pre") return cmd_pre(cfg);
  if (name == "sweep") return cmd_sweep(cfg);
  if (name == "optimize") return cmd_optimize(cfg);
  if (name == "simulate") return cmd_simulate(cfg);
  throw InputError("unknown command '" + std::string(name) + "'");
}

/// Renders a command's output in the configured format.
inline std::string render_output(const CommandOutput& out, const RunConfig& cfg) {
  if (cfg.format == Format::json && out.document) return out.document->dump(2) + "\n";
  return render(out.table, cfg.format, cfg.full_precision);
}

// ---------------------------------------------------------------------------
// JSON configuration file

inline RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  try {
    cfg.input = j.value("input", std::string{});
    if (j.contains("schema")) {
      const auto s = parse_schema(j.at("schema").get<std::string>());
      if (!s) throw InputError("config: unknown schema");
      cfg.schema = *s;
    }
    if (j.contains("corrections")) {
      const auto c = j.at("corrections").get<std::string>();
      if (c != "off" && c != "auto") throw InputError("config: corrections must be off|auto");
      cfg.corrections = c == "auto" ? Corrections::auto_repair : Corrections::off;
    }
    if (j.contains("sample_sizes")) cfg.design.sample_sizes = j.at("sample_sizes").get<std::vector<Count>>();
    if (j.contains("neyman_total")) cfg.design.neyman_total = j.at("neyman_total").get<Count>();
    if (j.contains("estimators")) cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      cfg.sweep.start = s.value("start", cfg.sweep.start);
      cfg.sweep.stop = s.value("stop", cfg.sweep.stop);
      cfg.sweep.step = s.value("step", cfg.sweep.step);
      if (s.contains("values")) cfg.sweep.values = s.at("values").get<std::vector<double>>();
      check_grid(cfg.sweep);
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      cfg.simulation.spec_path = s.value("spec", std::string{});
      if (s.contains("replications")) cfg.simulation.replications = s.at("replications").get<Count>();
      if (s.contains("seed")) cfg.simulation.seed = s.at("seed").get<std::uint64_t>();
      cfg.simulation.threads = s.value("threads", 1u);
    }
    cfg.output_dir = j.value("output_dir", std::string{});
    if (j.contains("format")) {
      const auto f = parse_format(j.at("format").get<std::string>());
      if (!f) throw InputError("config: unknown format");
      cfg.format = *f;
    }
    cfg.full_precision = j.value("full_precision", false);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace stratest
