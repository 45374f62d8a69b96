#include "popmfg/fixed_point.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "popmfg/hj.hpp"
#include "popmfg/protocols.hpp"

namespace popmfg {

namespace {

void require_finite(const Trajectory& traj, std::size_t iteration, const char* what) {
  for (const Vec& node : traj.nodes()) {
    for (double value : node) {
      if (!std::isfinite(value)) {
        throw NumericalFailure(std::string("non-finite ") + what + " at iteration " +
                               std::to_string(iteration));
      }
    }
  }
}

template <class Fn>
auto at_iteration(std::size_t iteration, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(ema_weight > 0.0 && ema_weight <= 1.0)) {
    throw InvalidInput("EMA weight must lie in (0, 1]");
  }
  if (max_iters < 1) throw InvalidInput("max_iters must be at least 1");
  if (!(tolerance >= 0.0)) throw InvalidInput("tolerance must be nonnegative");
}

double fixed_point_error(const Trajectory& x_a, const Trajectory& x_b) {
  if (!(x_a.grid() == x_b.grid()) || x_a.dim() != x_b.dim()) {
    throw InvalidInput("fixed_point_error: trajectories are on different grids");
  }
  const std::size_t m = x_a.grid().intervals();
  const auto sq_dist = [&](std::size_t k) {
    double s = 0.0;
    const Vec& a = x_a.node(k);
    const Vec& b = x_b.node(k);
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  double total = 0.5 * (sq_dist(0) + sq_dist(m));
  for (std::size_t k = 1; k < m; ++k) total += sq_dist(k);
  return total * x_a.grid().step();
}

SolveResult solve(const Game& game, const WeightScheme& scheme, const PopulationState& x0,
                  const SolverConfig& config, const IterateObserver& observer) {
  config.validate();
  const std::size_t n = game.strategies();
  if (x0.size() != n) throw InvalidInput("initial state does not match the game");
  scheme.validate(n);

  const TimeGrid& grid = config.grid;
  const ProtocolKind protocol = OptimalPairwise{scheme};
  const double a = config.ema_weight;

  Trajectory x =
      at_iteration(0, [&] { return integrate_forward(protocol, game, x0, StaticPayoff{}, grid); });
  require_finite(x, 0, "initial state trajectory");
  if (observer) observer(0, x);

  std::vector<double> errors;
  errors.reserve(config.max_iters);
  std::optional<ValueTrajectory> v;
  // A zero tolerance never stops early, so the full iteration budget runs.
  const bool early_stop = config.tolerance > 0.0;
  double e = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  while (k < config.max_iters && !(early_stop && e <= config.tolerance)) {
    v = at_iteration(k, [&] { return integrate_backward(game, scheme, x, grid); });
    require_finite(*v, k, "payoff trajectory");
    const Trajectory x_response = at_iteration(
        k, [&] { return integrate_forward(protocol, game, x0, FrozenPayoff{*v}, grid); });
    require_finite(x_response, k, "state trajectory");

    std::vector<Vec> blended(grid.node_count(), Vec(n));
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
      const Vec& old_x = x.node(node);
      const Vec& new_x = x_response.node(node);
      for (std::size_t i = 0; i < n; ++i) {
        blended[node][i] = (1.0 - a) * old_x[i] + a * new_x[i];
      }
    }
    Trajectory x_next(grid, std::move(blended));
    e = fixed_point_error(x, x_next);
    if (!std::isfinite(e)) {
      throw NumericalFailure("non-finite fixed-point error at iteration " + std::to_string(k));
    }
    errors.push_back(e);
    x = std::move(x_next);
    ++k;
    if (observer) observer(k, x);
  }

  // Values reported with x* are the payoff dynamics along x* itself, so the
  // terminal condition v(T) = F(x*(T)) holds exactly for the returned pair.
  v = at_iteration(k, [&] { return integrate_backward(game, scheme, x, grid); });
  require_finite(*v, k, "payoff trajectory");
  SolveResult result{std::move(x), std::move(*v), std::move(errors), k, false};
  result.converged = early_stop && result.error_history.back() <= config.tolerance;
  return result;
}

}  // namespace popmfg
