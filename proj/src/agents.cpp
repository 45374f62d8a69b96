#include "popmfg/agents.hpp"

#include <numeric>
#include <string>

namespace popmfg {

namespace {

constexpr double kProbabilitySlack = 1e-12;

void apply_step(AgentPopulation& pop, std::span<const double> rates, double dt) {
  const std::size_t n = pop.n_strategies();
  const std::vector<std::size_t> occupied = pop.counts();
  for (std::size_t i = 0; i < n; ++i) {
    if (occupied[i] == 0) continue;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) total += rates[i * n + j];
    }
    if (total * dt > 1.0 + kProbabilitySlack) {
      throw StepSizeError("switch probability " + std::to_string(total * dt) +
                          " exceeds 1 for strategy " + std::to_string(i) +
                          "; use a finer time grid (dt * max_i sum_j rate_ij must be <= 1)");
    }
  }
  Rng& rng = pop.rng();
  for (std::size_t& s : pop.mutable_strategies()) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == s) continue;
      cumulative += rates[s * n + j] * dt;
      if (u < cumulative) {
        s = j;
        break;
      }
    }
  }
}

}  // namespace

AgentPopulation::AgentPopulation(std::vector<std::size_t> strategies, std::size_t n_strategies,
                                 std::uint64_t seed)
    : strategies_(std::move(strategies)), n_strategies_(n_strategies), rng_(seed) {
  if (n_strategies_ < 2) throw InvalidInput("population needs at least 2 strategies");
  if (strategies_.empty()) throw InvalidInput("population needs at least one agent");
  for (std::size_t s : strategies_) {
    if (s >= n_strategies_) throw InvalidInput("agent strategy index out of range");
  }
}

AgentPopulation AgentPopulation::from_counts(std::span<const std::size_t> counts,
                                             std::uint64_t seed) {
  std::vector<std::size_t> strategies;
  strategies.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  for (std::size_t i = 0; i < counts.size(); ++i) strategies.insert(strategies.end(), counts[i], i);
  return AgentPopulation(std::move(strategies), counts.size(), seed);
}

std::vector<std::size_t> AgentPopulation::counts() const {
  std::vector<std::size_t> c(n_strategies_, 0);
  for (std::size_t s : strategies_) ++c[s];
  return c;
}

PopulationState AgentPopulation::empirical() const {
  const std::vector<std::size_t> c = counts();
  Vec masses(c.size());
  const double total = static_cast<double>(n_agents());
  for (std::size_t i = 0; i < c.size(); ++i) masses[i] = static_cast<double>(c[i]) / total;
  return PopulationState::normalized(std::move(masses));
}

std::vector<double> rate_matrix(const RateFn& rates, std::size_t n) {
  std::vector<double> r(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double value = rates(i, j);
      if (!(value >= 0.0)) throw InvalidInput("switch rates must be nonnegative");
      r[i * n + j] = value;
    }
  }
  return r;
}

AgentPopulation step(AgentPopulation pop, const RateFn& rates, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("step size must be positive");
  const std::vector<double> r = rate_matrix(rates, pop.n_strategies());
  apply_step(pop, r, dt);
  return pop;
}

Trajectory simulate(const Game& game, const WeightScheme& scheme, const PayoffSource& source,
                    std::span<const std::size_t> x0_counts, const TimeGrid& grid,
                    std::uint64_t seed) {
  const std::size_t n = game.strategies();
  if (x0_counts.size() != n) throw InvalidInput("initial counts do not match the game");
  if (std::accumulate(x0_counts.begin(), x0_counts.end(), std::size_t{0}) == 0) {
    throw InvalidInput("simulation needs at least one agent");
  }
  scheme.validate(n);
  const Trajectory* frozen = nullptr;
  if (const auto* f = std::get_if<FrozenPayoff>(&source)) {
    frozen = &f->values.get();
    if (!(frozen->grid() == grid) || frozen->dim() != n) {
      throw InvalidInput("frozen payoff trajectory does not match the simulation grid");
    }
  }

  AgentPopulation pop = AgentPopulation::from_counts(x0_counts, seed);
  const ProtocolKind protocol = OptimalPairwise{scheme};
  const double dt = grid.step();
  std::vector<Vec> nodes;
  nodes.reserve(grid.node_count());
  Vec p(n);
  std::vector<double> r(n * n, 0.0);
  for (std::size_t k = 0;; ++k) {
    const PopulationState x_hat = pop.empirical();
    nodes.push_back(x_hat.masses());
    if (k == grid.intervals()) break;
    if (frozen) {
      p = frozen->node(k);
    } else {
      game.evaluate(x_hat.masses(), p);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        r[i * n + j] = i == j ? 0.0 : protocol_rate(protocol, p, x_hat.masses(), i, j);
      }
    }
    apply_step(pop, r, dt);
  }
  return Trajectory(grid, std::move(nodes));
}

}  // namespace popmfg
