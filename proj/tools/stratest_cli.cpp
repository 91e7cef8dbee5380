// stratest: command-line front end.
//
//   stratest <command> --input FILE [--schema summary|units|moments]
//            [--corrections off|auto] [--format text|csv|markdown|json]
//            [--output-dir DIR] [--full-precision] [--config FILE] ...
//
// Commands: validate, moments, mse, pre, sweep, optimize, simulate.
// A JSON config file may supply any setting; flags given on the command
// line win over it.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stratest.hpp"

namespace {

struct Flags {
  std::string config;
  std::string input;
  std::string schema;
  std::string corrections;
  std::string output_dir;
  std::string format;
  bool full_precision = false;
  std::vector<std::string> estimators;
  std::vector<stratest::Count> sample_sizes;
  stratest::Count neyman_total = 0;
  double theta_start = 0, theta_stop = 0, theta_step = 0;
  std::vector<double> thetas;
  std::string sim_spec;
  stratest::Count replications = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace stratest;

  CLI::App app{"Stratified ratio/product/dual estimators: MSE theory and Monte Carlo checks"};
  app.require_subcommand(1);
  Flags f;

  auto* o_config = app.add_option("--config", f.config, "JSON run configuration");
  auto* o_input = app.add_option("--input,-i", f.input, "input file");
  auto* o_schema = app.add_option("--schema", f.schema, "input schema")
                       ->check(CLI::IsMember({"summary", "units", "moments"}));
  auto* o_corr = app.add_option("--corrections", f.corrections, "repair policy")
                     ->check(CLI::IsMember({"off", "auto"}));
  auto* o_outdir = app.add_option("--output-dir,-o", f.output_dir, "write <command>.<ext> here");
  auto* o_format = app.add_option("--format,-f", f.format, "output format")
                       ->check(CLI::IsMember({"text", "csv", "markdown", "md", "json"}));
  auto* o_full = app.add_flag("--full-precision", f.full_precision, "17 significant digits");
  auto* o_est = app.add_option("--estimator,-e", f.estimators,
                               "estimator spec, e.g. tracy_product:A=18631.62 or dual_family:opt");
  auto* o_sizes = app.add_option("--sample-sizes", f.sample_sizes, "per-stratum n (unit input)")
                      ->delimiter(',');
  auto* o_ney = app.add_option("--neyman-total", f.neyman_total,
                               "Neyman-allocate this total sample (unit input)");
  auto* o_tstart = app.add_option("--theta-start", f.theta_start, "sweep start");
  auto* o_tstop = app.add_option("--theta-stop", f.theta_stop, "sweep stop");
  auto* o_tstep = app.add_option("--theta-step", f.theta_step, "sweep step");
  auto* o_thetas = app.add_option("--theta", f.thetas, "explicit sweep values")->delimiter(',');
  auto* o_simspec = app.add_option("--sim-spec", f.sim_spec, "population spec JSON");
  auto* o_reps = app.add_option("--replications,-R", f.replications, "Monte Carlo replications");
  auto* o_seed = app.add_option("--seed", f.seed, "Monte Carlo seed");
  auto* o_threads = app.add_option("--threads", f.threads, "worker threads (0 = all cores)");

  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check the input and report findings"},
      {"moments", "V_rst and dual V'_rst moments"},
      {"mse", "first-order MSE of the chosen estimators"},
      {"pre", "percent relative efficiency against y_st"},
      {"sweep", "MSE of the Tracy-type estimator over a theta grid"},
      {"optimize", "closed-form theta and alpha optima"},
      {"simulate", "Monte Carlo check of the MSE formulas"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg;
    if (o_config->count()) cfg = run_config_from_json(json::parse(read_file(f.config)));

    if (o_input->count()) cfg.input = f.input;
    if (o_schema->count()) cfg.schema = *parse_schema(f.schema);
    if (o_corr->count()) {
      cfg.corrections = f.corrections == "auto" ? Corrections::auto_repair : Corrections::off;
    }
    if (o_outdir->count()) cfg.output_dir = f.output_dir;
    if (o_format->count()) cfg.format = *parse_format(f.format);
    if (o_full->count()) cfg.full_precision = f.full_precision;
    if (o_est->count()) cfg.estimators = f.estimators;
    if (o_sizes->count()) cfg.design.sample_sizes = f.sample_sizes;
    if (o_ney->count()) cfg.design.neyman_total = f.neyman_total;
    if (o_tstart->count()) cfg.sweep.start = f.theta_start;
    if (o_tstop->count()) cfg.sweep.stop = f.theta_stop;
    if (o_tstep->count()) cfg.sweep.step = f.theta_step;
    if (o_thetas->count()) cfg.sweep.values = f.thetas;
    if (o_simspec->count()) cfg.simulation.spec_path = f.sim_spec;
    if (o_reps->count()) cfg.simulation.replications = f.replications;
    if (o_seed->count()) cfg.simulation.seed = f.seed;
    if (o_threads->count()) cfg.simulation.threads = f.threads;

    const auto out = run_command(command, cfg);
    const auto text = render_output(out, cfg);
    if (cfg.output_dir.empty()) {
      std::cout << text;
    } else {
      const auto path = std::filesystem::path(cfg.output_dir) /
                        (command + "." + std::string(format_extension(cfg.format)));
      write_file(path, text);
      std::cerr << "wrote " << path.string() << '\n';
    }
    return out.failed ? 1 : 0;
  } catch (const ValidationFailed& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
