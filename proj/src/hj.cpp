#include "popmfg/hj.hpp"

#include <cmath>
#include <string>

#include "popmfg/rk4.hpp"

namespace popmfg {

void hj_rhs(const Game& game, const WeightScheme& scheme, std::span<const double> v,
            std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  if (v.size() != n || out.size() != n) throw InvalidInput("hj_rhs: dimension mismatch");
  game.evaluate(x, out);
  for (std::size_t i = 0; i < n; ++i) {
    double hamiltonian = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double gain = v[j] - v[i];
      if (!(gain > 0.0)) continue;
      const auto q = scheme.weight(x, i, j);
      if (!q) continue;
      hamiltonian += gain * gain / *q;
    }
    out[i] = -0.5 * hamiltonian - out[i];
  }
}

Vec hj_rhs(const Game& game, const WeightScheme& scheme, std::span<const double> v,
           std::span<const double> x) {
  Vec out(x.size());
  hj_rhs(game, scheme, v, x, out);
  return out;
}

ValueTrajectory integrate_backward(const Game& game, const WeightScheme& scheme,
                                   const Trajectory& x_frozen, const TimeGrid& grid) {
  if (!(x_frozen.grid() == grid)) {
    throw InvalidInput("frozen state trajectory is on a different time grid");
  }
  const std::size_t n = game.strategies();
  if (x_frozen.dim() != n) throw InvalidInput("frozen state has the wrong dimension");
  scheme.validate(n);

  const std::size_t m = grid.intervals();
  std::vector<Vec> nodes(m + 1);
  Vec v = game.evaluate(x_frozen.node(m));
  nodes[m] = v;

  Vec x(n);
  // In reversed time the derivative flips sign.
  const auto rhs = [&](double t, std::span<const double> v_stage, std::span<double> out) {
    x_frozen.at(t, x);
    hj_rhs(game, scheme, v_stage, x, out);
    for (double& d : out) d = -d;
  };

  detail::Rk4Workspace ws(n);
  const double h = grid.step();
  for (std::size_t k = m; k > 0; --k) {
    const double t = grid.time(k);
    const double t_prev = grid.time(k - 1);
    detail::rk4_step(rhs, t, 0.5 * (t + t_prev), t_prev, h, v, ws);
    for (double vi : v) {
      if (!std::isfinite(vi)) {
        throw NumericalFailure("backward integration produced a non-finite value at node " +
                               std::to_string(k - 1));
      }
    }
    nodes[k - 1] = v;
  }
  return Trajectory(grid, std::move(nodes));
}

}  // namespace popmfg
