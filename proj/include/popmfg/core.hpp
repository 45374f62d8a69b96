#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "popmfg/errors.hpp"

namespace popmfg {

using Vec = std::vector<double>;
using Matrix = std::vector<Vec>;

inline constexpr double kSimplexTol = 1e-9;
inline constexpr double kDefaultWeightFloor = 1e-8;
inline constexpr double kDefaultLogShift = 1e-6;

// Clips negative entries to zero and rescales to unit sum.
Vec renormalize_to_simplex(Vec masses);

// A point on the probability simplex: n >= 2 nonnegative masses summing to 1.
class PopulationState {
 public:
  explicit PopulationState(Vec masses);

  static PopulationState uniform(std::size_t n);
  // Accepts any nonnegative vector with positive sum (e.g. agent counts).
  static PopulationState normalized(Vec masses);

  std::size_t size() const { return masses_.size(); }
  double operator[](std::size_t i) const { return masses_[i]; }
  const Vec& masses() const { return masses_; }
  operator std::span<const double>() const { return masses_; }

  double min_mass() const;

  friend bool operator==(const PopulationState&, const PopulationState&) = default;

 private:
  Vec masses_;
};

// Uniform grid t_k = t0 + k*dt, k = 0..M.
class TimeGrid {
 public:
  TimeGrid(double t0, double t_end, std::size_t intervals);

  // M = round((t_end - t0) / dt); the realised step may differ from dt by rounding.
  static TimeGrid with_step(double t0, double t_end, double dt);

  double t0() const { return t0_; }
  double t_end() const { return t_end_; }
  std::size_t intervals() const { return intervals_; }
  std::size_t node_count() const { return intervals_ + 1; }
  double step() const { return (t_end_ - t0_) / static_cast<double>(intervals_); }
  double time(std::size_t k) const;
  double span() const { return t_end_ - t0_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t0_;
  double t_end_;
  std::size_t intervals_;
};

// Vector-valued path sampled on a TimeGrid, linearly interpolated in between.
class Trajectory {
 public:
  Trajectory(TimeGrid grid, std::vector<Vec> nodes);

  const TimeGrid& grid() const { return grid_; }
  std::size_t dim() const { return nodes_.front().size(); }
  std::size_t node_count() const { return nodes_.size(); }
  const Vec& node(std::size_t k) const { return nodes_.at(k); }
  const std::vector<Vec>& nodes() const { return nodes_; }

  Vec at(double t) const;
  void at(double t, std::span<double> out) const;

  static Trajectory constant(TimeGrid grid, const Vec& value);

 private:
  TimeGrid grid_;
  std::vector<Vec> nodes_;
};

// Value trajectories share the representation; the alias marks intent.
using ValueTrajectory = Trajectory;

// Throws InvalidInput unless every node lies on the simplex within tol.
void check_state_trajectory(const Trajectory& traj, double tol = kSimplexTol);

// Symmetric 0/1 adjacency with zero diagonal describing permitted switches.
class MigrationGraph {
 public:
  explicit MigrationGraph(std::vector<std::vector<int>> adjacency);

  static MigrationGraph complete(std::size_t n);

  std::size_t size() const { return adjacency_.size(); }
  bool allows(std::size_t i, std::size_t j) const { return adjacency_[i][j] != 0; }
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }

 private:
  std::vector<std::vector<int>> adjacency_;
};

enum class WeightKind { unit, inverse_target_mass, self_mass };

// Revision-cost weights q_ij(x); a forbidden link is reported as nullopt.
struct WeightScheme {
  WeightKind kind = WeightKind::unit;
  std::optional<MigrationGraph> graph;
  double floor = kDefaultWeightFloor;

  std::optional<double> weight(std::span<const double> x, std::size_t i, std::size_t j) const;
  bool permits(std::size_t i, std::size_t j) const { return !graph || graph->allows(i, j); }
  void validate(std::size_t n) const;
};

std::optional<double> weight(const WeightScheme& scheme, const PopulationState& x,
                             std::size_t i, std::size_t j);

struct Congestion6 {};
struct Rps3 {};
struct LinearGame {
  Matrix a;
  Vec b;
};
class Game;
struct EpsilonModified {
  std::shared_ptr<const Game> base;
  double epsilon;
  double delta = kDefaultLogShift;
};

// Payoff function F of a single-population game.
class Game {
 public:
  using Variant = std::variant<Congestion6, Rps3, LinearGame, EpsilonModified>;

  explicit Game(Variant v);

  static Game congestion6() { return Game(Congestion6{}); }
  static Game rps3() { return Game(Rps3{}); }
  static Game linear(Matrix a, Vec b);
  static Game epsilon_modified(Game base, double epsilon, double delta = kDefaultLogShift);

  std::size_t strategies() const { return n_; }
  const Variant& variant() const { return v_; }

  // Works on any finite vector of the right size; RK stages can leave the simplex slightly.
  void evaluate(std::span<const double> x, std::span<double> out) const;
  Vec evaluate(std::span<const double> x) const;

 private:
  Variant v_;
  std::size_t n_;
};

Vec evaluate_payoff(const Game& game, const PopulationState& x);

}  // namespace popmfg
