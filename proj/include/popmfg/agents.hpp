#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "popmfg/core.hpp"
#include "popmfg/protocols.hpp"

namespace popmfg {

// 64-bit Mersenne Twister with a portable mapping to [0, 1), so streams are
// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

class AgentPopulation {
 public:
  AgentPopulation(std::vector<std::size_t> strategies, std::size_t n_strategies,
                  std::uint64_t seed);

  // Agents are laid out strategy by strategy: counts[0] copies of 0, then 1, ...
  static AgentPopulation from_counts(std::span<const std::size_t> counts, std::uint64_t seed);

  std::size_t n_agents() const { return strategies_.size(); }
  std::size_t n_strategies() const { return n_strategies_; }
  const std::vector<std::size_t>& strategies() const { return strategies_; }
  std::vector<std::size_t> counts() const;
  PopulationState empirical() const;

  std::vector<std::size_t>& mutable_strategies() { return strategies_; }
  Rng& rng() { return rng_; }

  friend bool operator==(const AgentPopulation&, const AgentPopulation&) = default;

 private:
  std::vector<std::size_t> strategies_;
  std::size_t n_strategies_;
  Rng rng_;
};

using RateFn = std::function<double(std::size_t i, std::size_t j)>;

// Row-major n x n matrix of switch rates; the diagonal is ignored.
std::vector<double> rate_matrix(const RateFn& rates, std::size_t n);

// Each agent at i moves to j with probability rates(i, j) * dt, one uniform
// draw per agent. Throws StepSizeError when an occupied strategy has
// dt * sum_j rates(i, j) > 1.
AgentPopulation step(AgentPopulation pop, const RateFn& rates, double dt);

// Optimal-pairwise rates against the empirical state, with payoffs either
// myopic (StaticPayoff: p = F(x_hat)) or read from a frozen value trajectory.
// Rates are fixed at the start of each grid step.
Trajectory simulate(const Game& game, const WeightScheme& scheme, const PayoffSource& source,
                    std::span<const std::size_t> x0_counts, const TimeGrid& grid,
                    std::uint64_t seed);

}  // namespace popmfg
