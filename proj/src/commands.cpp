#include "popmfg/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "popmfg/agents.hpp"
#include "popmfg/analysis.hpp"
#include "popmfg/hj.hpp"
#include "popmfg/protocols.hpp"

namespace popmfg {

using nlohmann::json;

namespace {

// Rendered text for one output file, kept in memory until the run succeeds.
struct PendingFile {
  std::string name;
  std::string content;
};

void write_all(const std::filesystem::path& out_dir, const std::vector<PendingFile>& files) {
  std::filesystem::create_directories(out_dir);
  for (const PendingFile& f : files) {
    std::ofstream out(out_dir / f.name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / f.name).string());
    out << f.content;
  }
}

std::string indexed_header(std::string_view prefix, std::size_t n) {
  std::string h;
  for (std::size_t i = 1; i <= n; ++i) {
    h += ',';
    h += prefix;
    h += std::to_string(i);
  }
  return h;
}

void append_row(std::string& out, double t, std::initializer_list<const Vec*> blocks) {
  out += format_number(t);
  for (const Vec* block : blocks) {
    for (double v : *block) {
      out += ',';
      out += format_number(v);
    }
  }
  out += '\n';
}

std::string paired_csv(std::string_view left, std::string_view right, const Trajectory& a,
                       const Trajectory& b) {
  std::string csv = "t" + indexed_header(left, a.dim()) + indexed_header(right, b.dim()) + "\n";
  for (std::size_t k = 0; k < a.node_count(); ++k) {
    append_row(csv, a.grid().time(k), {&a.node(k), &b.node(k)});
  }
  return csv;
}

std::string errors_csv(const std::vector<double>& errors) {
  std::string csv = "k,e\n";
  for (std::size_t k = 0; k < errors.size(); ++k) {
    csv += std::to_string(k);
    csv += ',';
    csv += format_number(errors[k]);
    csv += '\n';
  }
  return csv;
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  double sup = 0.0;
  for (std::size_t k = 0; k < a.node_count(); ++k) {
    for (std::size_t i = 0; i < a.dim(); ++i) {
      sup = std::max(sup, std::abs(a.node(k)[i] - b.node(k)[i]));
    }
  }
  return sup;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalFailure*>(&e) || dynamic_cast<const StepSizeError*>(&e) ||
      dynamic_cast<const NoConvergence*>(&e)) {
    return kExitNumerical;
  }
  if (dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const OutOfRange*>(&e)) {
    return kExitDomain;
  }
  return kExitInternal;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

unsigned threads_from_env() {
  const char* raw = std::getenv("POPMFG_THREADS");
  if (!raw) return 1;
  unsigned value = 0;
  const std::string_view s(raw);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || value == 0) return 1;
  return value;
}

void run_solve(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
               std::ostream& log) {
  const SolveResult result = solve(cfg.game, cfg.scheme, cfg.x0, cfg.solver_config());
  const Trajectory& x = result.x_star;
  const Trajectory& v = result.v_star;

  std::string traj = "t" + indexed_header("x_", x.dim()) + indexed_header("v_", v.dim()) + "\n";
  for (std::size_t k = 0; k < x.node_count(); ++k) {
    append_row(traj, x.grid().time(k), {&x.node(k), &v.node(k)});
  }
  write_all(out_dir, {{cfg.outputs.trajectory, traj},
                      {cfg.outputs.errors, errors_csv(result.error_history)}});

  log << "iterations " << result.iterations_run << '\n';
  if (!result.error_history.empty()) {
    log << "first_error " << format_number(result.error_history.front()) << '\n';
    log << "final_error " << format_number(result.error_history.back()) << '\n';
  }
  log << "converged " << (result.converged ? "true" : "false") << '\n';
}

void run_compare(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                 std::ostream& log) {
  const PopulationState x_star = nash_equilibrium(cfg.game, cfg.analysis.nash_tol);
  const SolveResult optimal = solve(cfg.game, cfg.scheme, cfg.x0, cfg.solver_config());
  const Trajectory smith =
      integrate_forward(SmithStatic{}, cfg.game, cfg.x0, StaticPayoff{}, cfg.grid());

  const auto metrics = [&](const Trajectory& x) {
    return json{{"time_averaged_distance", time_averaged_distance(x, x_star)},
                {"terminal_distance", terminal_distance(x, x_star)}};
  };
  json summary{{"nash_equilibrium", x_star.masses()},
               {"optimal", metrics(optimal.x_star)},
               {"smith", metrics(smith)}};

  write_all(out_dir, {{cfg.outputs.compare, paired_csv("x_opt_", "x_smith_", optimal.x_star, smith)},
                      {cfg.outputs.summary, summary.dump(2) + "\n"}});
  log << "optimal time_averaged_distance "
      << format_number(summary["optimal"]["time_averaged_distance"].get<double>()) << '\n';
  log << "smith time_averaged_distance "
      << format_number(summary["smith"]["time_averaged_distance"].get<double>()) << '\n';
}

double run_agents(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                  std::ostream& log) {
  if (!cfg.mc) throw ConfigError("the agents command needs an mc block");
  const TimeGrid grid = cfg.grid();
  const std::vector<std::size_t> counts = cfg.initial_counts();
  const PopulationState x_start = PopulationState::normalized(
      Vec(counts.begin(), counts.end()));
  const ProtocolKind protocol = OptimalPairwise{cfg.scheme};

  std::optional<Trajectory> empirical;
  std::optional<Trajectory> ode;
  if (cfg.mc->payoff == McPayoff::myopic) {
    empirical = simulate(cfg.game, cfg.scheme, StaticPayoff{}, counts, grid, cfg.mc->seed);
    ode = integrate_forward(protocol, cfg.game, x_start, StaticPayoff{}, grid);
  } else {
    const SolveResult result = solve(cfg.game, cfg.scheme, cfg.x0, cfg.solver_config());
    empirical = simulate(cfg.game, cfg.scheme, FrozenPayoff{result.v_star}, counts, grid,
                         cfg.mc->seed);
    ode = integrate_forward(protocol, cfg.game, x_start, FrozenPayoff{result.v_star}, grid);
  }
  const double sup = sup_distance(*empirical, *ode);
  write_all(out_dir, {{cfg.outputs.agents, paired_csv("xhat_", "xode_", *empirical, *ode)}});
  log << "sup_distance " << format_number(sup) << '\n';
  return sup;
}

void run_analyze(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                 std::ostream& log, unsigned threads) {
  const AnalysisParams& params = cfg.analysis;
  const std::size_t n = cfg.game.strategies();
  json doc;

  const PopulationState x_star = nash_equilibrium(cfg.game, params.nash_tol);
  const Vec f_star = evaluate_payoff(cfg.game, x_star);
  const Vec field = ed_vector_field(OptimalPairwise{cfg.scheme}, f_star, x_star.masses());
  double field_norm = 0.0;
  for (double v : field) field_norm = std::max(field_norm, std::abs(v));
  const bool nash_ok = is_nash(cfg.game, x_star, params.nash_tol);
  const bool interior = x_star.min_mass() > 1e-6;
  doc["nash_equilibrium"] = {{"x", x_star.masses()},
                             {"payoff", f_star},
                             {"is_nash", nash_ok},
                             {"interior", interior},
                             {"field_residual", field_norm},
                             {"pass", nash_ok && field_norm < kStationaryField}};

  const ContractivenessReport probe =
      contractiveness_probe(cfg.game, params.probe_samples, params.probe_seed);
  doc["contractiveness"] = {{"contractive_margin", probe.contractive_margin},
                            {"strong_epsilon_estimate", probe.strong_epsilon_estimate},
                            {"contractive", probe.contractive()},
                            {"strongly_contractive", probe.strong_epsilon_estimate > 0.0},
                            {"samples", params.probe_samples}};

  const SolverConfig solver = cfg.solver_config();
  const SolveResult result = solve(cfg.game, cfg.scheme, cfg.x0, solver);
  const CorrelationAudit audit =
      positive_correlation_audit(result.v_star, result.x_star, cfg.scheme);
  doc["positive_correlation"] = {{"min_inner_product", audit.min_inner_product},
                                 {"violations", audit.violations},
                                 {"pass", audit.violations == 0}};

  if (interior && nash_ok) {
    const SolveResult at_rest = solve(cfg.game, cfg.scheme, x_star, solver);
    const StationaryDiagnostics diag = stationary_diagnostics(cfg.game, x_star, at_rest.v_star);
    doc["stationary"] = {{"kappa", diag.kappa},
                         {"max_form_residual", diag.max_form_residual},
                         {"tolerance", params.stationary_tol},
                         {"pass", diag.max_form_residual <= params.stationary_tol}};
  } else {
    doc["stationary"] = {{"skipped", "equilibrium is not interior"}};
  }

  json sweep = json::array();
  bool decreasing = true;
  if (!params.horizons.empty()) {
    const std::vector<HorizonPoint> points = horizon_sweep(
        cfg.game, cfg.scheme, cfg.x0, params.horizons, solver, x_star, threads);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sweep.push_back({{"T", points[i].horizon}, {"midpoint_distance", points[i].midpoint_distance}});
      if (i > 0 && !(points[i].midpoint_distance < points[i - 1].midpoint_distance)) {
        decreasing = false;
      }
    }
  }
  doc["horizon_sweep"] = {{"points", sweep},
                          {"strictly_decreasing", decreasing},
                          {"assumptions_met", interior && probe.strong_epsilon_estimate > 0.0},
                          {"pass", decreasing}};
  doc["strategies"] = n;

  write_all(out_dir, {{cfg.outputs.diagnostics, doc.dump(2) + "\n"}});
  log << "nash " << (doc["nash_equilibrium"]["pass"].get<bool>() ? "pass" : "fail") << '\n';
  log << "contractive " << (probe.contractive() ? "true" : "false") << " strong_epsilon "
      << format_number(probe.strong_epsilon_estimate) << '\n';
  log << "positive_correlation_violations " << audit.violations << '\n';
  log << "horizon_sweep " << (decreasing ? "decreasing" : "not decreasing") << '\n';
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) table.header.push_back(field);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = rest.substr(0, comma);
      double value = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (res.ec != std::errc()) throw std::runtime_error("bad number in " + path.string());
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace popmfg
