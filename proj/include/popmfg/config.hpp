#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "popmfg/core.hpp"
#include "popmfg/fixed_point.hpp"

namespace popmfg {

struct SolverParams {
  double a = 0.01;
  std::size_t n_iters = 100;
  double eps_f = 0.0;
};

enum class McPayoff { myopic, optimal };

struct McParams {
  std::size_t n_agents = 0;
  std::uint64_t seed = 0;
  McPayoff payoff = McPayoff::myopic;
};

struct AnalysisParams {
  double nash_tol = 1e-8;
  std::size_t probe_samples = 2000;
  std::uint64_t probe_seed = 1;
  std::vector<double> horizons{4.0, 8.0, 16.0};
  double stationary_tol = 1e-4;
};

struct OutputNames {
  std::string trajectory = "trajectory.csv";
  std::string errors = "errors.csv";
  std::string compare = "compare.csv";
  std::string summary = "summary.json";
  std::string agents = "agents.csv";
  std::string diagnostics = "diagnostics.json";
};

struct ExperimentConfig {
  Game game = Game::rps3();
  WeightScheme scheme;
  PopulationState x0 = PopulationState::uniform(3);
  double t0 = 0.0;
  double t_end = 6.0;
  double dt = 0.01;
  SolverParams solver;
  std::optional<McParams> mc;
  AnalysisParams analysis;
  OutputNames outputs;

  TimeGrid grid() const { return TimeGrid::with_step(t0, t_end, dt); }
  SolverConfig solver_config() const;
  // Integer agent counts closest to x0 * n_agents (largest remainder).
  std::vector<std::size_t> initial_counts() const;
};

// Both throw ConfigError on malformed JSON, unknown keys or values that
// violate the domain types' invariants.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

Game parse_game(const nlohmann::json& node);
WeightScheme parse_scheme(const nlohmann::json& node, std::size_t n);

}  // namespace popmfg
