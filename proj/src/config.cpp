#include "popmfg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numeric>
#include <string_view>

namespace popmfg {

using nlohmann::json;

namespace {

void require_object(const json& node, std::string_view where) {
  if (!node.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
}

void reject_unknown(const json& node, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  require_object(node, where);
  for (const auto& item : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

double number(const json& node, std::string_view key) {
  if (!node.is_number()) throw ConfigError(std::string(key) + " must be a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ConfigError(std::string(key) + " must be finite");
  return v;
}

std::size_t count(const json& node, std::string_view key) {
  if (!node.is_number_integer() || node.get<long long>() < 0) {
    throw ConfigError(std::string(key) + " must be a nonnegative integer");
  }
  return node.get<std::size_t>();
}

Vec vector_of(const json& node, std::string_view key) {
  if (!node.is_array()) throw ConfigError(std::string(key) + " must be an array of numbers");
  Vec out;
  for (const auto& v : node) out.push_back(number(v, key));
  return out;
}

std::string text(const json& node, std::string_view key) {
  if (!node.is_string()) throw ConfigError(std::string(key) + " must be a string");
  return node.get<std::string>();
}

std::vector<std::vector<int>> adjacency_of(const json& node) {
  if (!node.is_array()) throw ConfigError("graph must be an array of rows");
  std::vector<std::vector<int>> rows;
  for (const auto& row : node) {
    if (!row.is_array()) throw ConfigError("graph rows must be arrays");
    std::vector<int> r;
    for (const auto& a : row) {
      if (!a.is_number_integer()) throw ConfigError("graph entries must be 0 or 1");
      r.push_back(a.get<int>());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

template <class Fn>
auto rethrow_as_config(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Game parse_game(const json& node) {
  require_object(node, "game");
  if (!node.contains("type")) throw ConfigError("game.type is required");
  const std::string type = text(node.at("type"), "game.type");
  return rethrow_as_config([&] {
    if (type == "congestion6") {
      reject_unknown(node, {"type"}, "game");
      return Game::congestion6();
    }
    if (type == "rps3") {
      reject_unknown(node, {"type"}, "game");
      return Game::rps3();
    }
    if (type == "linear") {
      reject_unknown(node, {"type", "A", "b"}, "game");
      if (!node.contains("A") || !node.contains("b")) throw ConfigError("linear game needs A and b");
      Matrix a;
      if (!node.at("A").is_array()) throw ConfigError("game.A must be an array of rows");
      for (const auto& row : node.at("A")) a.push_back(vector_of(row, "game.A"));
      return Game::linear(std::move(a), vector_of(node.at("b"), "game.b"));
    }
    if (type == "epsilon_modified") {
      reject_unknown(node, {"type", "base", "epsilon", "delta"}, "game");
      if (!node.contains("base") || !node.contains("epsilon")) {
        throw ConfigError("epsilon_modified game needs base and epsilon");
      }
      const double delta =
          node.contains("delta") ? number(node.at("delta"), "game.delta") : kDefaultLogShift;
      return Game::epsilon_modified(parse_game(node.at("base")),
                                    number(node.at("epsilon"), "game.epsilon"), delta);
    }
    throw ConfigError("unknown game type '" + type + "'");
  });
}

WeightScheme parse_scheme(const json& node, std::size_t n) {
  reject_unknown(node, {"kind", "graph", "floor"}, "scheme");
  WeightScheme scheme;
  if (node.contains("kind")) {
    const std::string kind = text(node.at("kind"), "scheme.kind");
    if (kind == "unit") {
      scheme.kind = WeightKind::unit;
    } else if (kind == "inverse_target_mass") {
      scheme.kind = WeightKind::inverse_target_mass;
    } else if (kind == "self_mass") {
      scheme.kind = WeightKind::self_mass;
    } else {
      throw ConfigError("unknown weight scheme '" + kind + "'");
    }
  }
  if (node.contains("floor")) scheme.floor = number(node.at("floor"), "scheme.floor");
  rethrow_as_config([&] {
    if (node.contains("graph")) scheme.graph = MigrationGraph(adjacency_of(node.at("graph")));
    scheme.validate(n);
    return 0;
  });
  return scheme;
}

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc, {"game", "scheme", "x0", "t0", "T", "dt", "solver", "mc", "analysis",
                       "outputs"},
                 "config");
  if (!doc.contains("game")) throw ConfigError("config.game is required");
  if (!doc.contains("T")) throw ConfigError("config.T is required");

  ExperimentConfig cfg;
  cfg.game = parse_game(doc.at("game"));
  const std::size_t n = cfg.game.strategies();
  cfg.scheme = doc.contains("scheme") ? parse_scheme(doc.at("scheme"), n) : WeightScheme{};

  cfg.x0 = PopulationState::uniform(n);
  if (doc.contains("x0")) {
    const json& x0 = doc.at("x0");
    if (x0.is_string()) {
      if (x0.get<std::string>() != "uniform") throw ConfigError("x0 must be \"uniform\" or an array");
    } else {
      Vec masses = vector_of(x0, "x0");
      if (masses.size() != n) throw ConfigError("x0 length does not match the game");
      cfg.x0 = rethrow_as_config([&] { return PopulationState(std::move(masses)); });
    }
  }

  if (doc.contains("t0")) cfg.t0 = number(doc.at("t0"), "t0");
  cfg.t_end = number(doc.at("T"), "T");
  if (doc.contains("dt")) cfg.dt = number(doc.at("dt"), "dt");
  rethrow_as_config([&] { return cfg.grid(); });

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    reject_unknown(s, {"a", "N", "eps_f"}, "solver");
    if (s.contains("a")) cfg.solver.a = number(s.at("a"), "solver.a");
    if (s.contains("N")) cfg.solver.n_iters = count(s.at("N"), "solver.N");
    if (s.contains("eps_f")) cfg.solver.eps_f = number(s.at("eps_f"), "solver.eps_f");
  }
  rethrow_as_config([&] {
    cfg.solver_config().validate();
    return 0;
  });

  if (doc.contains("mc")) {
    const json& m = doc.at("mc");
    reject_unknown(m, {"n_agents", "seed", "payoff"}, "mc");
    if (!m.contains("n_agents") || !m.contains("seed")) {
      throw ConfigError("mc needs n_agents and seed");
    }
    McParams mc;
    mc.n_agents = count(m.at("n_agents"), "mc.n_agents");
    if (mc.n_agents == 0) throw ConfigError("mc.n_agents must be positive");
    mc.seed = count(m.at("seed"), "mc.seed");
    if (m.contains("payoff")) {
      const std::string p = text(m.at("payoff"), "mc.payoff");
      if (p == "myopic") {
        mc.payoff = McPayoff::myopic;
      } else if (p == "optimal") {
        mc.payoff = McPayoff::optimal;
      } else {
        throw ConfigError("mc.payoff must be \"myopic\" or \"optimal\"");
      }
    }
    cfg.mc = mc;
  }

  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    reject_unknown(a, {"nash_tol", "probe_samples", "probe_seed", "horizons", "stationary_tol"},
                   "analysis");
    if (a.contains("nash_tol")) cfg.analysis.nash_tol = number(a.at("nash_tol"), "analysis.nash_tol");
    if (a.contains("probe_samples")) {
      cfg.analysis.probe_samples = count(a.at("probe_samples"), "analysis.probe_samples");
    }
    if (a.contains("probe_seed")) cfg.analysis.probe_seed = count(a.at("probe_seed"), "analysis.probe_seed");
    if (a.contains("horizons")) cfg.analysis.horizons = vector_of(a.at("horizons"), "analysis.horizons");
    if (a.contains("stationary_tol")) {
      cfg.analysis.stationary_tol = number(a.at("stationary_tol"), "analysis.stationary_tol");
    }
    if (!(cfg.analysis.nash_tol > 0.0)) throw ConfigError("analysis.nash_tol must be positive");
    if (cfg.analysis.probe_samples < 2) throw ConfigError("analysis.probe_samples must be >= 2");
    for (double h : cfg.analysis.horizons) {
      if (!(h > cfg.t0)) throw ConfigError("analysis.horizons must exceed t0");
    }
  }

  if (doc.contains("outputs")) {
    const json& o = doc.at("outputs");
    reject_unknown(o, {"trajectory", "errors", "compare", "summary", "agents", "diagnostics"},
                   "outputs");
    const auto set = [&](const char* key, std::string& field) {
      if (!o.contains(key)) return;
      field = text(o.at(key), key);
      const std::filesystem::path p(field);
      if (field.empty() || p.has_parent_path() || p.is_absolute()) {
        throw ConfigError(std::string("outputs.") + key + " must be a plain file name");
      }
    };
    set("trajectory", cfg.outputs.trajectory);
    set("errors", cfg.outputs.errors);
    set("compare", cfg.outputs.compare);
    set("summary", cfg.outputs.summary);
    set("agents", cfg.outputs.agents);
    set("diagnostics", cfg.outputs.diagnostics);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

SolverConfig ExperimentConfig::solver_config() const {
  return SolverConfig{solver.a, solver.n_iters, solver.eps_f, grid()};
}

std::vector<std::size_t> ExperimentConfig::initial_counts() const {
  if (!mc) throw ConfigError("config has no mc block");
  const std::size_t n = x0.size();
  const double total = static_cast<double>(mc->n_agents);
  std::vector<std::size_t> counts(n);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = x0[i] * total;
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < mc->n_agents && r < remainders.size(); ++r, ++assigned) {
    ++counts[remainders[r].second];
  }
  while (assigned > mc->n_agents) {
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

}  // namespace popmfg
