#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "support.hpp"

using namespace stratest;
using Catch::Approx;
using testing_support::data_path;
using testing_support::rel_diff;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "stratest_test_commands";
  std::filesystem::create_directories(dir);
  return dir;
}

RunConfig fixture_config() {
  RunConfig cfg;
  cfg.input = data_path("table1_corrected.csv").string();
  return cfg;
}

double real_at(const Table& t, std::size_t row, std::size_t col) {
  return std::get<double>(t.rows.at(row).at(col));
}

std::string text_at(const Table& t, std::size_t row, std::size_t col) {
  return std::get<std::string>(t.rows.at(row).at(col));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STRATEST_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("pre on the fixture gives the efficiency table", "[commands][pre]") {
  const auto out = cmd_pre(fixture_config());
  const auto& t = out.table;
  REQUIRE(t.rows.size() == 5);
  CHECK(text_at(t, 0, 0) == "y_st");
  CHECK(text_at(t, 1, 0) == "y1");
  CHECK(text_at(t, 2, 0) == "y5");
  CHECK(text_at(t, 3, 0) == "y8");
  CHECK(text_at(t, 4, 0) == "y9 (opt)");
  CHECK(real_at(t, 0, 3) == Approx(100.0).epsilon(1e-14));
  CHECK(real_at(t, 3, 1) == 1.0);
  CHECK(real_at(t, 3, 2) == 1.0);
  CHECK(rel_diff(real_at(t, 1, 3), 924.1152586305767) < 1e-9);
  CHECK(rel_diff(real_at(t, 2, 3), 159.78340700822838) < 1e-9);
  CHECK(rel_diff(real_at(t, 3, 3), 119.88469222031635) < 1e-9);
  CHECK(rel_diff(real_at(t, 4, 3), 833.1505432902786) < 1e-9);
  CHECK(rel_diff(real_at(t, 4, 1), 0.6088536732633144) < 1e-9);
  CHECK(rel_diff(real_at(t, 4, 2), -3.922981837318857) < 1e-9);
}

TEST_CASE("pre with a classical-only list gives one row", "[commands][pre]") {
  auto cfg = fixture_config();
  cfg.estimators = {"classical"};
  const auto t = cmd_pre(cfg).table;
  REQUIRE(t.rows.size() == 1);
  CHECK(real_at(t, 0, 3) == Approx(100.0).epsilon(1e-14));
}

TEST_CASE("pre from exported moments matches pre from strata", "[commands][pre][moments]") {
  auto cfg = fixture_config();
  const auto exported = cmd_moments(cfg);
  REQUIRE(exported.document);
  const auto path = scratch_dir() / "moments.json";
  write_file(path, exported.document->dump(2));

  RunConfig mcfg;
  mcfg.input = path.string();
  mcfg.schema = Schema::moments;
  const auto a = cmd_pre(cfg).table;
  const auto b = cmd_pre(mcfg).table;
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    CHECK(text_at(a, r, 0) == text_at(b, r, 0));
    for (std::size_t c = 1; c < 4; ++c) CHECK(rel_diff(real_at(a, r, c), real_at(b, r, c)) <= 1e-12);
  }
  CHECK(render_output(cmd_sweep(cfg), cfg) == render_output(cmd_sweep(mcfg), mcfg));
  CHECK(render_output(cmd_optimize(cfg), cfg) == render_output(cmd_optimize(mcfg), mcfg));
}

TEST_CASE("sweep over the default grid", "[commands][sweep]") {
  const auto cfg = fixture_config();
  const auto out = cmd_sweep(cfg);
  const auto& t = out.table;
  REQUIRE(t.rows.size() == 18);
  std::size_t opt_row = t.rows.size();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double theta = real_at(t, r, 0);
    CHECK(real_at(t, r, 1) == Approx(11440.498483206933 * (1 + theta) / theta).epsilon(1e-14));
    if (std::holds_alternative<std::string>(t.rows[r][4])) {
      CHECK(text_at(t, r, 4) == "opt *");
      opt_row = r;
    }
  }
  REQUIRE(opt_row < t.rows.size());
  CHECK(rel_diff(real_at(t, opt_row, 0), 1.5170454051701312) < 1e-12);
  // Strictly decreasing toward the optimum, strictly increasing after.
  for (std::size_t r = 1; r <= opt_row; ++r) CHECK(real_at(t, r, 2) < real_at(t, r - 1, 2));
  for (std::size_t r = opt_row + 1; r < t.rows.size(); ++r) {
    CHECK(real_at(t, r, 2) > real_at(t, r - 1, 2));
  }
  CHECK(real_at(t, 0, 0) == Approx(0.8));
  CHECK(real_at(t, 17, 0) == Approx(2.4));
  CHECK(text_at(t, 0, 3) == "<V(y_st)");
  REQUIRE(t.notes.size() >= 2);
  CHECK(t.notes[1].find("theta < 0.71398") != std::string::npos);
}

TEST_CASE("sweep grid edge cases", "[commands][sweep][errors]") {
  auto cfg = fixture_config();
  cfg.sweep.values = {1.0};
  const auto t = cmd_sweep(cfg).table;
  REQUIRE(t.rows.size() == 2);  // the point plus the optimum
  CHECK(real_at(t, 0, 0) == 1.0);
  CHECK(real_at(t, 0, 1) == 2 * 11440.498483206933);

  cfg.sweep.values = {0.5, 0.0, 1.0};
  CHECK_THROWS_AS(cmd_sweep(cfg), InputError);
  cfg.sweep.values.clear();
  cfg.sweep.start = -0.2;
  cfg.sweep.stop = 0.2;
  cfg.sweep.step = 0.1;
  CHECK_THROWS_AS(cmd_sweep(cfg), InputError);
  cfg.sweep.step = 0.0;
  CHECK_THROWS_AS(cmd_sweep(cfg), InputError);
  cfg.sweep.step = 0.1;
  cfg.sweep.start = 3;
  CHECK_THROWS_AS(cmd_sweep(cfg), InputError);
}

TEST_CASE("validate reports and fails on the as-printed fixture", "[commands][validate]") {
  RunConfig cfg;
  cfg.input = data_path("table1_as_printed.csv").string();
  const auto off = cmd_validate(cfg);
  CHECK(off.failed);
  cfg.corrections = Corrections::auto_repair;
  const auto fixed = cmd_validate(cfg);
  CHECK_FALSE(fixed.failed);
  CHECK_FALSE(cmd_validate(fixture_config()).failed);
}

TEST_CASE("mse and optimize tables", "[commands]") {
  auto cfg = fixture_config();
  cfg.estimators = {"classical", "tracy_product:A=22880.996966413866", "tracy_product:opt",
                    "dual_family:a1=1,a2=1"};
  const auto t = cmd_mse(cfg).table;
  REQUIRE(t.rows.size() == 4);
  CHECK(rel_diff(real_at(t, 0, 2), 2228.5201298310753) < 1e-12);
  CHECK(rel_diff(real_at(t, 1, 2), 1281.909) < 1e-5);
  CHECK(rel_diff(real_at(t, 2, 2), 611.6825813791327) < 1e-10);

  const auto o = cmd_optimize(fixture_config()).table;
  std::map<std::string, double> q;
  for (std::size_t r = 0; r < o.rows.size(); ++r) q[text_at(o, r, 0)] = real_at(o, r, 1);
  CHECK(rel_diff(q.at("theta_opt"), 1.5170454051701312) < 1e-12);
  CHECK(rel_diff(q.at("A_opt"), 18981.80109960682) < 1e-12);
  CHECK(rel_diff(q.at("alpha1_opt"), 0.6088536732633144) < 1e-10);
  CHECK(rel_diff(q.at("mse_min_y9"), 267.4810870350276) < 1e-10);
}

TEST_CASE("emitted CSV tables re-parse under their own columns", "[commands][report]") {
  auto cfg = fixture_config();
  cfg.full_precision = true;
  cfg.format = Format::csv;
  for (const char* name : {"validate", "moments", "mse", "pre", "sweep", "optimize"}) {
    INFO(name);
    const auto out = run_command(name, cfg);
    const auto text = render_output(out, cfg);
    const auto back = parse_csv_table(text, out.table.columns);
    REQUIRE(back.rows.size() == out.table.rows.size());
    for (std::size_t r = 0; r < back.rows.size(); ++r) {
      for (std::size_t c = 0; c < back.columns.size(); ++c) {
        CHECK(back.rows[r][c] == out.table.rows[r][c]);
      }
    }
  }
}

TEST_CASE("simulate command", "[commands][simulate]") {
  const auto dir = scratch_dir();
  const auto census = dir / "census.json";
  write_file(census, R"({"seed": 3, "replications": 40,
    "strata": [{"id": "a", "N": 30, "n": 30, "mean": [10, 5, 3], "sd": [1, 0.5, 0.3],
                "rho": {"xy": 0.8, "yz": 0.4, "xz": 0.3}},
               {"id": "b", "N": 20, "n": 20, "mean": [15, 8, 4], "sd": [1.5, 0.8, 0.4]}]})");
  RunConfig cfg;
  cfg.simulation.spec_path = census.string();
  const auto t = cmd_simulate(cfg).table;
  REQUIRE(t.rows.size() == 3);  // dual kinds skipped under a census design
  for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(real_at(t, r, 7) == 0.0);

  RunConfig det;
  det.simulation.spec_path = data_path("sim_three_strata.json").string();
  det.simulation.replications = 500;
  det.full_precision = true;
  det.format = Format::csv;
  const auto a = render_output(cmd_simulate(det), det);
  det.simulation.threads = 3;
  const auto b = render_output(cmd_simulate(det), det);
  CHECK(a == b);
  det.simulation.seed = 99;
  CHECK(render_output(cmd_simulate(det), det) != a);
}

TEST_CASE("config file values are overridden by flags", "[commands][cli]") {
  const auto dir = scratch_dir();
  const auto cfg_path = dir / "config.json";
  write_file(cfg_path, "{\"input\": \"" + data_path("table1_corrected.csv").string() +
                           "\", \"format\": \"csv\", \"estimators\": [\"classical\"],"
                           " \"output_dir\": \"" + dir.string() + "\"}");
  const auto cfg = run_config_from_json(json::parse(read_file(cfg_path)));
  CHECK(cfg.format == Format::csv);
  CHECK(cfg.estimators == std::vector<std::string>{"classical"});
  CHECK_THROWS_AS(run_config_from_json(json::parse("{\"corrections\": \"maybe\"}")), InputError);

  std::filesystem::remove(dir / "pre.csv");
  std::filesystem::remove(dir / "pre.md");
  REQUIRE(run_cli("pre --config " + cfg_path.string()) == 0);
  CHECK(read_file(dir / "pre.csv").rfind("estimator,alpha1,alpha2,PRE\ny_st,0,0,100\n", 0) == 0);
  REQUIRE(run_cli("pre --config " + cfg_path.string() + " --format markdown") == 0);
  CHECK(std::filesystem::exists(dir / "pre.md"));
}

TEST_CASE("CLI exit status", "[commands][cli]") {
  const auto printed = data_path("table1_as_printed.csv").string();
  const auto corrected = data_path("table1_corrected.csv").string();
  CHECK(run_cli("validate --input " + printed) == 1);
  CHECK(run_cli("pre --input " + printed) == 1);
  CHECK(run_cli("validate --input " + printed + " --corrections auto") == 0);
  CHECK(run_cli("validate --input " + corrected) == 0);
  CHECK(run_cli("pre -i " + corrected + " --format json") == 0);
  CHECK(run_cli("sweep -i " + corrected + " --theta 0,1") == 2);
  CHECK(run_cli("pre -i /nonexistent.csv") == 2);
  CHECK(run_cli("bogus") != 0);
}
