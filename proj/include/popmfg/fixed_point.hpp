#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "popmfg/core.hpp"

namespace popmfg {

struct SolverConfig {
  double ema_weight = 0.01;  // a in (0, 1]
  std::size_t max_iters = 100;
  double tolerance = 0.0;  // 0 disables early stopping
  TimeGrid grid{0.0, 6.0, 600};

  void validate() const;
};

struct SolveResult {
  Trajectory x_star;
  ValueTrajectory v_star;
  std::vector<double> error_history;
  std::size_t iterations_run = 0;
  bool converged = false;
};

// Called with (k, x^(k)) for k = 0 .. iterations_run.
using IterateObserver = std::function<void(std::size_t, const Trajectory&)>;

// Trapezoidal approximation of the integral of ||x_a(t) - x_b(t)||_2^2.
double fixed_point_error(const Trajectory& x_a, const Trajectory& x_b);

// Damped forward/backward iteration for the coupled payoff and state dynamics:
// x^(0) is the myopic optimal-pairwise flow; each sweep solves the payoff
// dynamics along x^(k), re-solves the state flow under those payoffs, and
// blends x^(k+1) = (1 - a) x^(k) + a x'.
SolveResult solve(const Game& game, const WeightScheme& scheme, const PopulationState& x0,
                  const SolverConfig& config, const IterateObserver& observer = {});

}  // namespace popmfg
