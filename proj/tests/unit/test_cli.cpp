#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "popmfg/commands.hpp"
#include "popmfg/config.hpp"

using namespace popmfg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static std::mt19937_64 gen(std::random_device{}());
  const fs::path dir = fs::temp_directory_path() / ("popmfg_" + tag + "_" + std::to_string(gen()));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + POPMFG_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  std::ofstream(dir / name) << text;
  return dir / name;
}

json small_rps() {
  return json{{"game", {{"type", "rps3"}}},
              {"scheme", {{"kind", "unit"}}},
              {"x0", {0.7, 0.2, 0.1}},
              {"T", 2.0},
              {"dt", 0.01},
              {"solver", {{"a", 0.05}, {"N", 20}, {"eps_f", 0.0}}},
              {"mc", {{"n_agents", 500}, {"seed", 11}}},
              {"analysis", {{"horizons", {1.0, 2.0}}, {"probe_samples", 200}}}};
}

const fs::path kConfigs(POPMFG_CONFIG_DIR);

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = load_config(kConfigs / "congestion.json");
  CHECK(cfg.game.strategies() == 6);
  CHECK(cfg.x0.masses() == Vec(6, 1.0 / 6.0));
  CHECK(cfg.solver.a == 0.01);
  CHECK(cfg.solver.n_iters == 100);
  CHECK(cfg.solver.eps_f == 0.0);
  CHECK(cfg.grid().intervals() == 600);
  CHECK(cfg.mc->n_agents == 10000);

  const ExperimentConfig rps = load_config(kConfigs / "rps.json");
  CHECK(rps.solver.n_iters == 6000);
  CHECK(rps.x0.masses() == Vec{0.7, 0.2, 0.1});
  CHECK(rps.initial_counts() == std::vector<std::size_t>{7000, 2000, 1000});

  json doc = small_rps();
  doc["game"] = {{"type", "linear"}, {"A", {{-1.0, 0.0}, {0.0, -1.0}}}, {"b", {0.0, 0.1}}};
  doc["x0"] = "uniform";
  doc["scheme"] = {{"kind", "self_mass"}, {"graph", {{0, 1}, {1, 0}}}, {"floor", 1e-6}};
  const ExperimentConfig lin = parse_config(doc);
  CHECK(lin.game.evaluate(Vec{0.5, 0.5}) == Vec{-0.5, -0.4});
  CHECK(lin.scheme.kind == WeightKind::self_mass);
  CHECK(lin.scheme.floor == 1e-6);

  doc["game"] = {{"type", "epsilon_modified"}, {"base", {{"type", "rps3"}}}, {"epsilon", 0.1}};
  doc["x0"] = {0.2, 0.3, 0.5};
  doc.erase("scheme");
  const ExperimentConfig eps = parse_config(doc);
  CHECK(eps.game.strategies() == 3);
  CHECK(eps.scheme.kind == WeightKind::unit);
}

TEST_CASE("config errors") {
  const auto rejects = [](const json& doc) { CHECK_THROWS_AS(parse_config(doc), ConfigError); };
  json doc = small_rps();
  doc["extra"] = 1;
  rejects(doc);

  doc = small_rps();
  doc["solver"]["typo"] = 1;
  rejects(doc);

  doc = small_rps();
  doc.erase("T");
  rejects(doc);

  doc = small_rps();
  doc["solver"]["a"] = 0.0;
  rejects(doc);

  doc = small_rps();
  doc["x0"] = {0.5, 0.6, 0.1};
  rejects(doc);

  doc = small_rps();
  doc["x0"] = {0.5, 0.5};
  rejects(doc);

  doc = small_rps();
  doc["mc"]["n_agents"] = 0;
  rejects(doc);

  doc = small_rps();
  doc["game"] = {{"type", "chess"}};
  rejects(doc);

  doc = small_rps();
  doc["scheme"] = {{"kind", "unit"}, {"graph", {{0, 1, 0}, {0, 0, 1}, {0, 1, 0}}}};
  rejects(doc);

  doc = small_rps();
  doc["T"] = -1.0;
  rejects(doc);

  doc = small_rps();
  doc["outputs"] = {{"trajectory", "../escape.csv"}};
  rejects(doc);

  const fs::path dir = fresh_dir("bad");
  CHECK_THROWS_AS(load_config(write_text(dir, "broken.json", "{\"game\": ")), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
  CHECK(exit_code_for(NumericalFailure("x")) == kExitNumerical);
  CHECK(exit_code_for(StepSizeError("x")) == kExitNumerical);
  CHECK(exit_code_for(NoConvergence("x")) == kExitNumerical);
  CHECK(exit_code_for(InvalidInput("x")) == kExitDomain);
  CHECK(exit_code_for(DomainError("x")) == kExitDomain);
  CHECK(exit_code_for(std::runtime_error("x")) == kExitInternal);

  const fs::path dir = fresh_dir("exit");
  const fs::path broken = write_text(dir, "broken.json", "{ not json");
  const fs::path out = dir / "out";
  CHECK(run_cli("solve --config \"" + broken.string() + "\" --out \"" + out.string() + "\"") == 2);
  CHECK_FALSE(fs::exists(out));

  json doc = small_rps();
  doc["mc"]["n_agents"] = 0;
  const fs::path zero = write_text(dir, "zero.json", doc.dump());
  CHECK(run_cli("agents --config \"" + zero.string() + "\" --out \"" + out.string() + "\"") == 2);
  CHECK_FALSE(fs::exists(out));

  // Payoff gaps too large for the agent time step.
  doc = small_rps();
  doc["game"] = {{"type", "linear"}, {"A", {{0.0, 0.0}, {0.0, 0.0}}}, {"b", {0.0, 500.0}}};
  doc["x0"] = "uniform";
  const fs::path steep = write_text(dir, "steep.json", doc.dump());
  CHECK(run_cli("agents --config \"" + steep.string() + "\" --out \"" + out.string() + "\"") == 3);
  CHECK_FALSE(fs::exists(out));

  // Self-mass weights stay defined on the boundary through the weight floor.
  doc = small_rps();
  doc["scheme"] = {{"kind", "self_mass"}};
  doc["x0"] = {0.0, 0.5, 0.5};
  const fs::path edge = write_text(dir, "edge.json", doc.dump());
  CHECK(run_cli("solve --config \"" + edge.string() + "\" --out \"" + out.string() + "\"") == 0);

  CHECK(run_cli("solve") == 2);
  CHECK(run_cli("dance --config x") == 2);
  fs::remove_all(dir);
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 20) - 10);
    CHECK(std::stod(format_number(x)) == x);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(6.0) == "6");
}

TEST_CASE("solve outputs") {
  const ExperimentConfig cfg = parse_config(small_rps());
  const fs::path dir = fresh_dir("solve");
  std::ostringstream log;
  run_solve(cfg, dir, log);
  CHECK(log.str().find("iterations 20") != std::string::npos);

  const CsvTable traj = read_csv(dir / "trajectory.csv");
  CHECK(traj.header == std::vector<std::string>{"t", "x_1", "x_2", "x_3", "v_1", "v_2", "v_3"});
  REQUIRE(traj.rows.size() == cfg.grid().node_count());
  const CsvTable errs = read_csv(dir / "errors.csv");
  CHECK(errs.header == std::vector<std::string>{"k", "e"});
  CHECK(errs.rows.size() == 20);
  CHECK(errs.rows.front()[0] == 0.0);

  // The CSV holds the solver output exactly.
  const SolveResult r = solve(cfg.game, cfg.scheme, cfg.x0, cfg.solver_config());
  for (std::size_t k = 0; k < traj.rows.size(); ++k) {
    CHECK(traj.rows[k][0] == cfg.grid().time(k));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(traj.rows[k][1 + i] == r.x_star.node(k)[i]);
      CHECK(traj.rows[k][4 + i] == r.v_star.node(k)[i]);
    }
  }
  for (std::size_t k = 0; k < 20; ++k) CHECK(errs.rows[k][1] == r.error_history[k]);

  const fs::path again = fresh_dir("solve2");
  run_solve(cfg, again, log);
  CHECK(slurp(dir / "trajectory.csv") == slurp(again / "trajectory.csv"));
  CHECK(slurp(dir / "errors.csv") == slurp(again / "errors.csv"));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("bundled configs through the executable") {
  const fs::path dir = fresh_dir("bundled");
  const std::string congestion = (kConfigs / "congestion.json").string();
  CHECK(run_cli("solve --config \"" + congestion + "\" --out \"" + (dir / "c").string() + "\"") == 0);
  CHECK(read_csv(dir / "c" / "errors.csv").rows.size() == 100);
  CHECK(read_csv(dir / "c" / "trajectory.csv").rows.size() == 601);

  const std::string rps = (kConfigs / "rps.json").string();
  CHECK(run_cli("solve --config \"" + rps + "\" --out \"" + (dir / "r").string() + "\"") == 0);
  const CsvTable errs = read_csv(dir / "r" / "errors.csv");
  REQUIRE(errs.rows.size() == 6000);
  CHECK(errs.rows.back()[1] < errs.rows.front()[1]);
  fs::remove_all(dir);
}

TEST_CASE("compare outputs") {
  const fs::path dir = fresh_dir("compare");
  std::ostringstream log;
  run_compare(parse_config(small_rps()), dir, log);
  const CsvTable table = read_csv(dir / "compare.csv");
  CHECK(table.header == std::vector<std::string>{"t", "x_opt_1", "x_opt_2", "x_opt_3", "x_smith_1",
                                                 "x_smith_2", "x_smith_3"});
  CHECK(table.rows.front()[1] == 0.7);
  CHECK(table.rows.front()[4] == 0.7);
  const json summary = json::parse(slurp(dir / "summary.json"));
  for (const char* key : {"optimal", "smith"}) {
    CHECK(summary[key]["time_averaged_distance"].get<double>() > 0.0);
    CHECK(summary[key]["terminal_distance"].get<double>() > 0.0);
  }

  json doc = small_rps();
  doc["x0"] = "uniform";
  const fs::path rest = fresh_dir("compare_rest");
  run_compare(parse_config(doc), rest, log);
  const json at_rest = json::parse(slurp(rest / "summary.json"));
  for (const char* key : {"optimal", "smith"}) {
    CHECK(at_rest[key]["time_averaged_distance"].get<double>() <= 1e-8);
    CHECK(at_rest[key]["terminal_distance"].get<double>() <= 1e-8);
  }

  const fs::path again = fresh_dir("compare2");
  run_compare(parse_config(small_rps()), again, log);
  CHECK(slurp(dir / "compare.csv") == slurp(again / "compare.csv"));
  CHECK(slurp(dir / "summary.json") == slurp(again / "summary.json"));
  for (const fs::path& p : {dir, rest, again}) fs::remove_all(p);
}

TEST_CASE("agents outputs") {
  const fs::path dir = fresh_dir("agents");
  std::ostringstream log;
  const double sup = run_agents(parse_config(small_rps()), dir, log);
  CHECK(log.str().find("sup_distance") != std::string::npos);
  const CsvTable table = read_csv(dir / "agents.csv");
  CHECK(table.header == std::vector<std::string>{"t", "xhat_1", "xhat_2", "xhat_3", "xode_1",
                                                 "xode_2", "xode_3"});
  double measured = 0.0;
  for (const auto& row : table.rows)
    for (std::size_t i = 0; i < 3; ++i) measured = std::max(measured, std::abs(row[1 + i] - row[4 + i]));
  CHECK(measured == sup);

  json doc = small_rps();
  doc["mc"]["payoff"] = "optimal";
  const fs::path opt = fresh_dir("agents_opt");
  CHECK(run_agents(parse_config(doc), opt, log) < 0.2);

  const fs::path again = fresh_dir("agents2");
  run_agents(parse_config(small_rps()), again, log);
  CHECK(slurp(dir / "agents.csv") == slurp(again / "agents.csv"));

  doc = small_rps();
  doc.erase("mc");
  CHECK_THROWS_AS(run_agents(parse_config(doc), fresh_dir("agents_none"), log), ConfigError);
  for (const fs::path& p : {dir, opt, again}) fs::remove_all(p);
}

TEST_CASE("analyze outputs") {
  std::ostringstream log;
  const fs::path dir = fresh_dir("analyze");
  run_analyze(parse_config(small_rps()), dir, log, 2);
  const json rps = json::parse(slurp(dir / "diagnostics.json"));
  CHECK(rps["nash_equilibrium"]["pass"].get<bool>());
  CHECK(rps["contractiveness"]["contractive"].get<bool>());
  CHECK(rps["contractiveness"]["strong_epsilon_estimate"].get<double>() == 0.0);
  CHECK(rps["positive_correlation"]["violations"].get<int>() == 0);
  CHECK(std::abs(rps["stationary"]["kappa"].get<double>()) <= 1e-9);
  CHECK(rps["horizon_sweep"]["points"].size() == 2);
  CHECK_FALSE(rps["horizon_sweep"]["assumptions_met"].get<bool>());

  const json doc = json::parse(slurp(kConfigs / "congestion.json"));
  const fs::path cdir = fresh_dir("analyze_c");
  run_analyze(parse_config(doc), cdir, log, 3);
  const json c = json::parse(slurp(cdir / "diagnostics.json"));
  CHECK(c["contractiveness"]["contractive"].get<bool>());
  CHECK(c["contractiveness"]["strong_epsilon_estimate"].get<double>() > 0.0);
  CHECK(c["positive_correlation"]["violations"].get<int>() == 0);
  CHECK(c["stationary"]["kappa"].get<double>() == doctest::Approx(11.0 / 18.0).epsilon(1e-6));
  CHECK(c["stationary"]["pass"].get<bool>());
  CHECK(c["horizon_sweep"]["strictly_decreasing"].get<bool>());
  CHECK(c["horizon_sweep"]["assumptions_met"].get<bool>());

  const fs::path again = fresh_dir("analyze_c2");
  run_analyze(parse_config(doc), again, log, 1);
  CHECK(slurp(cdir / "diagnostics.json") == slurp(again / "diagnostics.json"));
  for (const fs::path& p : {dir, cdir, again}) fs::remove_all(p);
}
