#include "popmfg/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace popmfg {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Route-overlap costs of the six-route congestion game; F = -C x.
constexpr double kCongestion[6][6] = {
    {2.5, 1.0, 0.0, 0.0, 0.0, 0.0},
    {1.0, 2.5, 1.0, 0.0, 0.5, 0.0},
    {0.0, 1.0, 2.5, 0.0, 0.0, 0.0},
    {0.0, 0.0, 0.0, 2.5, 1.0, 0.0},
    {0.0, 0.5, 0.0, 1.0, 2.5, 1.0},
    {0.0, 0.0, 0.0, 0.0, 1.0, 2.5},
};

std::size_t strategy_count(const Game::Variant& v) {
  return std::visit(Overloaded{
                        [](const Congestion6&) -> std::size_t { return 6; },
                        [](const Rps3&) -> std::size_t { return 3; },
                        [](const LinearGame& g) { return g.b.size(); },
                        [](const EpsilonModified& g) { return g.base->strategies(); },
                    },
                    v);
}

}  // namespace

Vec renormalize_to_simplex(Vec masses) {
  double sum = 0.0;
  for (double& m : masses) {
    if (!(m > 0.0)) m = 0.0;
    sum += m;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw DomainError("cannot renormalize a vector with no positive finite mass");
  }
  for (double& m : masses) m /= sum;
  return masses;
}

PopulationState::PopulationState(Vec masses) : masses_(std::move(masses)) {
  if (masses_.size() < 2) {
    throw InvalidInput("population state needs at least 2 strategies");
  }
  double sum = 0.0;
  for (double m : masses_) {
    if (!std::isfinite(m) || m < 0.0) {
      throw InvalidInput("population state entries must be finite and nonnegative");
    }
    sum += m;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    throw InvalidInput("population state must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

PopulationState PopulationState::uniform(std::size_t n) {
  return PopulationState(Vec(n, 1.0 / static_cast<double>(n)));
}

PopulationState PopulationState::normalized(Vec masses) {
  for (double m : masses) {
    if (!std::isfinite(m) || m < 0.0) {
      throw InvalidInput("masses must be finite and nonnegative");
    }
  }
  return PopulationState(renormalize_to_simplex(std::move(masses)));
}

double PopulationState::min_mass() const {
  return *std::min_element(masses_.begin(), masses_.end());
}

TimeGrid::TimeGrid(double t0, double t_end, std::size_t intervals)
    : t0_(t0), t_end_(t_end), intervals_(intervals) {
  if (!(t0 >= 0.0) || !(t_end > t0) || !std::isfinite(t_end)) {
    throw InvalidInput("time grid requires 0 <= t0 < T");
  }
  if (intervals < 2) {
    throw InvalidInput("time grid requires at least 2 intervals");
  }
}

TimeGrid TimeGrid::with_step(double t0, double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("time step must be positive");
  const double m = std::round((t_end - t0) / dt);
  if (!(m >= 2.0)) throw InvalidInput("time step too coarse for the horizon");
  return TimeGrid(t0, t_end, static_cast<std::size_t>(m));
}

double TimeGrid::time(std::size_t k) const {
  if (k >= intervals_) return t_end_;
  return t0_ + static_cast<double>(k) * step();
}

Trajectory::Trajectory(TimeGrid grid, std::vector<Vec> nodes)
    : grid_(grid), nodes_(std::move(nodes)) {
  if (nodes_.size() != grid_.node_count()) {
    throw InvalidInput("trajectory node count does not match its grid");
  }
  const std::size_t n = nodes_.front().size();
  if (n == 0) throw InvalidInput("trajectory nodes must be non-empty");
  for (const Vec& v : nodes_) {
    if (v.size() != n) throw InvalidInput("trajectory nodes have inconsistent length");
  }
}

Trajectory Trajectory::constant(TimeGrid grid, const Vec& value) {
  return Trajectory(grid, std::vector<Vec>(grid.node_count(), value));
}

void Trajectory::at(double t, std::span<double> out) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(grid_.t_end()));
  if (!(t >= grid_.t0() - slack) || !(t <= grid_.t_end() + slack)) {
    throw OutOfRange("trajectory queried at t=" + std::to_string(t) + " outside [" +
                     std::to_string(grid_.t0()) + ", " + std::to_string(grid_.t_end()) + "]");
  }
  const std::size_t m = grid_.intervals();
  const double s = std::clamp((t - grid_.t0()) / grid_.step(), 0.0, static_cast<double>(m));
  const double nearest = std::round(s);
  if (std::abs(s - nearest) <= 1e-9) {
    const Vec& v = nodes_[static_cast<std::size_t>(nearest)];
    std::copy(v.begin(), v.end(), out.begin());
    return;
  }
  const auto k = std::min(static_cast<std::size_t>(s), m - 1);
  const double w = s - static_cast<double>(k);
  const Vec& a = nodes_[k];
  const Vec& b = nodes_[k + 1];
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
}

Vec Trajectory::at(double t) const {
  Vec out(dim());
  at(t, out);
  return out;
}

void check_state_trajectory(const Trajectory& traj, double tol) {
  for (std::size_t k = 0; k < traj.node_count(); ++k) {
    const Vec& x = traj.node(k);
    double sum = 0.0;
    for (double m : x) {
      if (!std::isfinite(m) || m < -tol) {
        throw InvalidInput("state trajectory leaves the simplex at node " + std::to_string(k));
      }
      sum += m;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw InvalidInput("state trajectory mass drifts at node " + std::to_string(k));
    }
  }
}

MigrationGraph::MigrationGraph(std::vector<std::vector<int>> adjacency)
    : adjacency_(std::move(adjacency)) {
  const std::size_t n = adjacency_.size();
  if (n < 2) throw InvalidInput("migration graph needs at least 2 nodes");
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency_[i].size() != n) throw InvalidInput("migration graph must be square");
    if (adjacency_[i][i] != 0) throw InvalidInput("migration graph must have zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const int a = adjacency_[i][j];
      if (a != 0 && a != 1) throw InvalidInput("migration graph entries must be 0 or 1");
      if (a != adjacency_[j][i]) throw InvalidInput("migration graph must be symmetric");
    }
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency_[i][j] != 0 && !seen[j]) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  if (reached != n) throw InvalidInput("migration graph must be connected");
}

MigrationGraph MigrationGraph::complete(std::size_t n) {
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 1));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 0;
  return MigrationGraph(std::move(a));
}

std::optional<double> WeightScheme::weight(std::span<const double> x, std::size_t i,
                                           std::size_t j) const {
  if (i == j) throw InvalidInput("weight is undefined for a self-transition");
  if (i >= x.size() || j >= x.size()) throw InvalidInput("strategy index out of range");
  if (!permits(i, j)) return std::nullopt;
  switch (kind) {
    case WeightKind::unit:
      return 1.0;
    case WeightKind::inverse_target_mass:
      return 1.0 / std::max(x[j], floor);
    case WeightKind::self_mass:
      return std::max(x[i], floor);
  }
  return 1.0;
}

void WeightScheme::validate(std::size_t n) const {
  if (!(floor > 0.0)) throw InvalidInput("weight floor must be positive");
  if (graph && graph->size() != n) {
    throw InvalidInput("migration graph size does not match the game");
  }
}

std::optional<double> weight(const WeightScheme& scheme, const PopulationState& x,
                             std::size_t i, std::size_t j) {
  return scheme.weight(x.masses(), i, j);
}

Game::Game(Variant v) : v_(std::move(v)), n_(strategy_count(v_)) {}

Game Game::linear(Matrix a, Vec b) {
  const std::size_t n = b.size();
  if (n < 2) throw InvalidInput("linear game needs at least 2 strategies");
  if (a.size() != n) throw InvalidInput("linear game matrix must be n x n");
  for (const Vec& row : a) {
    if (row.size() != n) throw InvalidInput("linear game matrix must be n x n");
  }
  return Game(LinearGame{std::move(a), std::move(b)});
}

Game Game::epsilon_modified(Game base, double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  if (!(delta > 0.0)) throw InvalidInput("delta must be positive");
  return Game(EpsilonModified{std::make_shared<const Game>(std::move(base)), epsilon, delta});
}

void Game::evaluate(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_ || out.size() != n_) {
    throw InvalidInput("payoff evaluation: expected " + std::to_string(n_) +
                       " strategies, got " + std::to_string(x.size()));
  }
  std::visit(Overloaded{
                 [&](const Congestion6&) {
                   for (std::size_t i = 0; i < 6; ++i) {
                     double s = 0.0;
                     for (std::size_t j = 0; j < 6; ++j) s += kCongestion[i][j] * x[j];
                     out[i] = -s;
                   }
                 },
                 [&](const Rps3&) {
                   out[0] = -x[1] + x[2];
                   out[1] = x[0] - x[2];
                   out[2] = -x[0] + x[1];
                 },
                 [&](const LinearGame& g) {
                   for (std::size_t i = 0; i < n_; ++i) {
                     double s = g.b[i];
                     for (std::size_t j = 0; j < n_; ++j) s += g.a[i][j] * x[j];
                     out[i] = s;
                   }
                 },
                 [&](const EpsilonModified& g) {
                   g.base->evaluate(x, out);
                   for (std::size_t i = 0; i < n_; ++i) {
                     const double arg = x[i] + g.delta;
                     if (!(arg > 0.0)) {
                       throw DomainError("epsilon-modified payoff needs x_i + delta > 0");
                     }
                     out[i] -= g.epsilon * std::log(arg);
                   }
                 },
             },
             v_);
}

Vec Game::evaluate(std::span<const double> x) const {
  Vec out(n_);
  evaluate(x, out);
  return out;
}

Vec evaluate_payoff(const Game& game, const PopulationState& x) {
  return game.evaluate(x.masses());
}

}  // namespace popmfg
