#include "popmfg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "popmfg/agents.hpp"
#include "popmfg/protocols.hpp"
#include "popmfg/rk4.hpp"

namespace popmfg {

namespace {

constexpr double kOracleStep = 0.01;
constexpr double kOracleTimeLimit = 1e4;

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Flat Dirichlet(1, ..., 1) via normalised exponentials.
Vec sample_simplex(Rng& rng, std::size_t n) {
  Vec x(n);
  double sum = 0.0;
  for (double& xi : x) {
    xi = -std::log1p(-rng.uniform());
    sum += xi;
  }
  for (double& xi : x) xi /= sum;
  return x;
}

}  // namespace

PopulationState nash_equilibrium(const Game& game, double tol) {
  return nash_equilibrium(game, tol, PopulationState::uniform(game.strategies()));
}

PopulationState nash_equilibrium(const Game& game, double tol, const PopulationState& start) {
  if (!(tol > 0.0)) throw InvalidInput("equilibrium tolerance must be positive");
  const std::size_t n = game.strategies();
  if (start.size() != n) throw InvalidInput("start state does not match the game");

  const ProtocolKind smith = SmithStatic{};
  Vec p(n);
  Vec field(n);
  const auto rhs = [&](double, std::span<const double> x, std::span<double> out) {
    game.evaluate(x, p);
    ed_vector_field(smith, p, x, out);
  };
  const auto residual = [&](const Vec& x) {
    game.evaluate(x, p);
    ed_vector_field(smith, p, x, field);
    return sup_norm(field);
  };

  Vec x = start.masses();
  detail::Rk4Workspace ws(n);
  const auto max_steps = static_cast<std::size_t>(kOracleTimeLimit / kOracleStep);
  for (std::size_t k = 0; k <= max_steps; ++k) {
    // A small field alone is not enough near a boundary equilibrium: mass on a
    // dominated strategy decays slowly while barely moving the field.
    if (residual(x) < tol / 10.0) {
      PopulationState candidate(x);
      if (is_nash(game, candidate, tol)) return candidate;
    }
    detail::rk4_step(rhs, 0.0, 0.0, 0.0, kOracleStep, x, ws);
    x = renormalize_to_simplex(std::move(x));
  }
  throw NoConvergence("Smith dynamics did not reach an equilibrium with ||V|| < " + std::to_string(tol / 10.0) +
                      " before t = 1e4");
}

bool is_nash(const Game& game, const PopulationState& x, double tol) {
  const Vec f = evaluate_payoff(game, x);
  const double best = *std::max_element(f.begin(), f.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > tol && f[i] < best - tol) return false;
  }
  return true;
}

ContractivenessReport contractiveness_probe(const Game& game, std::size_t n_samples,
                                            std::uint64_t seed) {
  if (n_samples < 2) throw InvalidInput("contractiveness probe needs at least 2 samples");
  const std::size_t n = game.strategies();
  Rng rng(seed);
  ContractivenessReport report;
  report.contractive_margin = -std::numeric_limits<double>::infinity();
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Vec x = sample_simplex(rng, n);
    const Vec y = sample_simplex(rng, n);
    const Vec fx = game.evaluate(x);
    const Vec fy = game.evaluate(y);
    double inner = 0.0;
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inner += (fx[i] - fy[i]) * (x[i] - y[i]);
      norm2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    report.contractive_margin = std::max(report.contractive_margin, inner);
    if (norm2 > 0.0) min_ratio = std::min(min_ratio, -inner / norm2);
  }
  report.strong_epsilon_estimate = min_ratio > 1e-12 && std::isfinite(min_ratio) ? min_ratio : 0.0;
  return report;
}

CorrelationAudit positive_correlation_audit(const ValueTrajectory& v_traj,
                                            const Trajectory& x_traj,
                                            const WeightScheme& scheme) {
  if (!(v_traj.grid() == x_traj.grid()) || v_traj.dim() != x_traj.dim()) {
    throw InvalidInput("audit trajectories must share a grid and dimension");
  }
  const ProtocolKind protocol = OptimalPairwise{scheme};
  CorrelationAudit audit;
  audit.min_inner_product = std::numeric_limits<double>::infinity();
  Vec field(x_traj.dim());
  for (std::size_t k = 0; k < x_traj.node_count(); ++k) {
    const Vec& p = v_traj.node(k);
    ed_vector_field(protocol, p, x_traj.node(k), field);
    double inner = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) inner += p[i] * field[i];
    audit.min_inner_product = std::min(audit.min_inner_product, inner);
    if (inner < kCorrelationFloor && sup_norm(field) > kStationaryField) ++audit.violations;
  }
  return audit;
}

StationaryDiagnostics stationary_diagnostics(const Game& game, const PopulationState& x_star,
                                             const ValueTrajectory& v_traj) {
  constexpr double kNashTol = 1e-6;
  if (x_star.min_mass() <= kNashTol || !is_nash(game, x_star, kNashTol)) {
    throw InvalidInput("stationary diagnostics need an interior Nash equilibrium");
  }
  if (v_traj.dim() != x_star.size()) throw InvalidInput("value trajectory dimension mismatch");
  const Vec f = evaluate_payoff(game, x_star);
  double common = 0.0;
  for (double fi : f) common += fi;
  common /= static_cast<double>(f.size());

  StationaryDiagnostics out;
  out.kappa = -common;
  const TimeGrid& grid = v_traj.grid();
  for (std::size_t k = 0; k < v_traj.node_count(); ++k) {
    const double drift = out.kappa * (grid.time(k) - grid.t_end());
    const Vec& v = v_traj.node(k);
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.max_form_residual = std::max(out.max_form_residual, std::abs(v[i] - (drift + f[i])));
    }
  }
  return out;
}

std::vector<HorizonPoint> horizon_sweep(const Game& game, const WeightScheme& scheme,
                                        const PopulationState& x0,
                                        const std::vector<double>& horizons,
                                        const SolverConfig& config_template,
                                        const PopulationState& x_star, unsigned threads) {
  const double t0 = config_template.grid.t0();
  const double dt = config_template.grid.step();
  const auto run = [&](double horizon) {
    SolverConfig config = config_template;
    config.grid = TimeGrid::with_step(t0, horizon, dt);
    const SolveResult result = solve(game, scheme, x0, config);
    const Vec mid = result.x_star.at(0.5 * (t0 + horizon));
    return HorizonPoint{horizon, euclidean_distance(mid, x_star.masses())};
  };

  std::vector<HorizonPoint> points(horizons.size());
  const std::size_t batch = std::max(1u, threads);
  for (std::size_t start = 0; start < horizons.size(); start += batch) {
    const std::size_t end = std::min(horizons.size(), start + batch);
    if (end - start == 1) {
      points[start] = run(horizons[start]);
      continue;
    }
    std::vector<std::future<HorizonPoint>> pending;
    for (std::size_t h = start; h < end; ++h) {
      pending.push_back(std::async(std::launch::async, run, horizons[h]));
    }
    for (std::size_t h = start; h < end; ++h) points[h] = pending[h - start].get();
  }
  return points;
}

double time_averaged_distance(const Trajectory& x_traj, const PopulationState& x_star) {
  if (x_traj.dim() != x_star.size()) throw InvalidInput("distance: dimension mismatch");
  const std::size_t m = x_traj.grid().intervals();
  double total = 0.5 * (euclidean_distance(x_traj.node(0), x_star.masses()) +
                        euclidean_distance(x_traj.node(m), x_star.masses()));
  for (std::size_t k = 1; k < m; ++k) total += euclidean_distance(x_traj.node(k), x_star.masses());
  return total * x_traj.grid().step() / x_traj.grid().span();
}

double terminal_distance(const Trajectory& x_traj, const PopulationState& x_star) {
  if (x_traj.dim() != x_star.size()) throw InvalidInput("distance: dimension mismatch");
  return euclidean_distance(x_traj.node(x_traj.grid().intervals()), x_star.masses());
}

PayoffEstimate payoff_functional_estimate(const Game& game, const WeightScheme& scheme,
                                          const ValueTrajectory& v_traj,
                                          const Trajectory& x_traj, std::size_t start,
                                          std::size_t n_rollouts, std::uint64_t seed,
                                          std::size_t substeps) {
  const std::size_t n = game.strategies();
  if (!(v_traj.grid() == x_traj.grid()) || v_traj.dim() != n || x_traj.dim() != n) {
    throw InvalidInput("payoff estimate needs matching value and state trajectories");
  }
  if (start >= n) throw InvalidInput("start strategy out of range");
  if (n_rollouts < 1) throw InvalidInput("need at least one rollout");
  if (substeps < 1) throw InvalidInput("need at least one substep");

  const TimeGrid& grid = x_traj.grid();
  const double h = grid.step() / static_cast<double>(substeps);
  AgentPopulation agents(std::vector<std::size_t>(n_rollouts, start), n, seed);
  std::vector<double> payoff(n_rollouts, 0.0);

  Vec x(n), v(n), f(n);
  std::vector<double> rates(n * n, 0.0);
  // Running reward per strategy: F_i(x) - sum_j [v_j - v_i]_+^2 / (2 q_ij).
  const auto reward_at = [&](double t, Vec& reward, bool fill_rates) {
    x_traj.at(t, x);
    v_traj.at(t, v);
    game.evaluate(x, f);
    for (std::size_t i = 0; i < n; ++i) {
      double cost = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double rate = 0.0;
        if (j != i) {
          const double gain = v[j] - v[i];
          const auto q = scheme.weight(x, i, j);
          if (gain > 0.0 && q) {
            rate = gain / *q;
            cost += 0.5 * *q * rate * rate;
          }
        }
        if (fill_rates) rates[i * n + j] = rate;
      }
      reward[i] = f[i] - cost;
    }
  };

  Vec reward_a(n), reward_b(n);
  const std::size_t total_steps = grid.intervals() * substeps;
  const double t0 = grid.t0();
  for (std::size_t s = 0; s < total_steps; ++s) {
    const double t_a = t0 + static_cast<double>(s) * h;
    const double t_b = s + 1 == total_steps ? grid.t_end() : t_a + h;
    reward_at(t_b, reward_b, false);
    reward_at(t_a, reward_a, true);
    const auto& strategies = agents.strategies();
    for (std::size_t r = 0; r < n_rollouts; ++r) {
      const std::size_t i = strategies[r];
      payoff[r] += 0.5 * h * (reward_a[i] + reward_b[i]);
    }
    agents = step(std::move(agents), [&](std::size_t i, std::size_t j) {
      return rates[i * n + j];
    }, h);
  }
  const Vec f_terminal = game.evaluate(x_traj.node(grid.intervals()));
  for (std::size_t r = 0; r < n_rollouts; ++r) payoff[r] += f_terminal[agents.strategies()[r]];

  double mean = 0.0;
  for (double value : payoff) mean += value;
  mean /= static_cast<double>(n_rollouts);
  double var = 0.0;
  for (double value : payoff) var += (value - mean) * (value - mean);
  const double denom = n_rollouts > 1 ? static_cast<double>(n_rollouts - 1) : 1.0;
  const double std_error = std::sqrt(var / denom / static_cast<double>(n_rollouts));
  return PayoffEstimate{mean, std_error, n_rollouts};
}

}  // namespace popmfg
