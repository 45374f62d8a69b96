#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>

#include "popmfg/core.hpp"

namespace popmfg {

// rho_ij = [p_j - p_i]_+ / q_ij(x): the optimal revision protocol.
struct OptimalPairwise {
  WeightScheme scheme;
};

// rho_ij = [p_j - p_i]_+ with no weights or graph.
struct SmithStatic {};

enum class ClosedFormModel { smith, replicator, projection };

struct ClosedForm {
  ClosedFormModel model = ClosedFormModel::smith;
  std::optional<MigrationGraph> graph;
};

using ProtocolKind = std::variant<OptimalPairwise, SmithStatic, ClosedForm>;

// Switch rate i -> j. Zero for forbidden links and for p_j <= p_i.
double protocol_rate(const ProtocolKind& kind, std::span<const double> p,
                     std::span<const double> x, std::size_t i, std::size_t j);

// V_i = sum_j x_j rho_ji - x_i sum_j rho_ij.
void ed_vector_field(const ProtocolKind& kind, std::span<const double> p,
                     std::span<const double> x, std::span<double> out);
Vec ed_vector_field(const ProtocolKind& kind, std::span<const double> p,
                    std::span<const double> x);

// Smith / replicator / projection right-hand sides, optionally restricted to
// graph neighbours. Projection throws DomainError off the interior.
void closed_form_field(ClosedFormModel model, std::span<const double> p,
                       std::span<const double> x, const std::optional<MigrationGraph>& graph,
                       std::span<double> out);
Vec closed_form_field(ClosedFormModel model, std::span<const double> p,
                      std::span<const double> x,
                      const std::optional<MigrationGraph>& graph = std::nullopt);

// Myopic agents: p(t) = F(x(t)).
struct StaticPayoff {};
// Forward-looking agents: p(t) read from a payoff trajectory on the same grid.
struct FrozenPayoff {
  std::reference_wrapper<const Trajectory> values;
};
using PayoffSource = std::variant<StaticPayoff, FrozenPayoff>;

// Fixed-step RK4 for x' = V(p(t), x), renormalised onto the simplex after
// every step. Node 0 is x0.
Trajectory integrate_forward(const ProtocolKind& kind, const Game& game,
                             const PopulationState& x0, const PayoffSource& source,
                             const TimeGrid& grid);

}  // namespace popmfg
