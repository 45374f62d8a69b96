#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "popmfg/core.hpp"
#include "popmfg/fixed_point.hpp"

namespace popmfg {

// Long-run Smith dynamics under p = F(x), stopped once ||V||_inf < tol / 10.
// Converges for contractive games; throws NoConvergence past t = 1e4.
PopulationState nash_equilibrium(const Game& game, double tol);
PopulationState nash_equilibrium(const Game& game, double tol, const PopulationState& start);

// Every strategy with mass above tol earns within tol of the best payoff.
bool is_nash(const Game& game, const PopulationState& x, double tol);

struct ContractivenessReport {
  // max over sampled pairs of (F(x) - F(y))^T (x - y); contractive iff <= ~0.
  double contractive_margin = 0.0;
  // Largest eps with (F(x) - F(y))^T (x - y) <= -eps ||x - y||^2 on every
  // sample. A sampled estimate, not a certificate; values below 1e-12 are
  // reported as 0.
  double strong_epsilon_estimate = 0.0;

  bool contractive() const { return contractive_margin <= 1e-12; }
};

ContractivenessReport contractiveness_probe(const Game& game, std::size_t n_samples,
                                            std::uint64_t seed);

struct CorrelationAudit {
  double min_inner_product = 0.0;
  std::size_t violations = 0;
};

inline constexpr double kCorrelationFloor = -1e-10;
inline constexpr double kStationaryField = 1e-8;

// p^T V(p, x) at every node with p = v(t); a violation is p^T V < -1e-10
// while ||V||_inf > 1e-8.
CorrelationAudit positive_correlation_audit(const ValueTrajectory& v_traj,
                                            const Trajectory& x_traj,
                                            const WeightScheme& scheme);

struct StationaryDiagnostics {
  double kappa = 0.0;
  double max_form_residual = 0.0;
};

// Checks v(t) against kappa (t - T) 1 + F(x*) with kappa = -(common payoff).
// x_star must be an interior Nash equilibrium.
StationaryDiagnostics stationary_diagnostics(const Game& game, const PopulationState& x_star,
                                             const ValueTrajectory& v_traj);

struct HorizonPoint {
  double horizon = 0.0;
  double midpoint_distance = 0.0;
};

// Runs solve() on [t0, T] for each T (grid step taken from the template) and
// reports ||x((t0 + T) / 2) - x*||_2. Up to `threads` solves run at once.
std::vector<HorizonPoint> horizon_sweep(const Game& game, const WeightScheme& scheme,
                                        const PopulationState& x0,
                                        const std::vector<double>& horizons,
                                        const SolverConfig& config_template,
                                        const PopulationState& x_star, unsigned threads = 1);

// (1 / (T - t0)) * integral of ||x(t) - x*||_2 dt, trapezoidal on the grid.
double time_averaged_distance(const Trajectory& x_traj, const PopulationState& x_star);
double terminal_distance(const Trajectory& x_traj, const PopulationState& x_star);

struct PayoffEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t rollouts = 0;
};

// Monte Carlo value of the finite-horizon payoff for an agent starting at
// `start`: switch rates [v_j - v_i]_+ / q_ij against the frozen trajectories,
// running reward -sum_j q_ij rho_ij^2 / 2 + F_i(x) and terminal F_{s(T)}(x(T)).
// Each grid interval is split into `substeps` jump steps.
PayoffEstimate payoff_functional_estimate(const Game& game, const WeightScheme& scheme,
                                          const ValueTrajectory& v_traj,
                                          const Trajectory& x_traj, std::size_t start,
                                          std::size_t n_rollouts, std::uint64_t seed,
                                          std::size_t substeps = 10);

}  // namespace popmfg
