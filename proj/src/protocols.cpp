#include "popmfg/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popmfg/rk4.hpp"

namespace popmfg {

namespace {

double positive_part(double d) { return d > 0.0 ? d : 0.0; }

WeightKind equivalent_weight(ClosedFormModel model) {
  switch (model) {
    case ClosedFormModel::smith:
      return WeightKind::unit;
    case ClosedFormModel::replicator:
      return WeightKind::inverse_target_mass;
    case ClosedFormModel::projection:
      return WeightKind::self_mass;
  }
  return WeightKind::unit;
}

void check_dims(std::span<const double> p, std::span<const double> x) {
  if (p.size() != x.size()) {
    throw InvalidInput("payoff has " + std::to_string(p.size()) + " entries, state has " +
                       std::to_string(x.size()));
  }
}

void check_pair(std::size_t n, std::size_t i, std::size_t j) {
  if (i == j) throw InvalidInput("protocol rate is undefined for i == j");
  if (i >= n || j >= n) throw InvalidInput("strategy index out of range");
}

double pairwise_rate(const WeightScheme& scheme, std::span<const double> p,
                     std::span<const double> x, std::size_t i, std::size_t j) {
  const double gain = positive_part(p[j] - p[i]);
  if (gain == 0.0) return 0.0;
  const auto q = scheme.weight(x, i, j);
  if (!q) return 0.0;
  return gain / *q;
}

// Generic mass balance for any rate function.
template <class Rate>
void mass_balance(std::size_t n, std::span<const double> x, Rate&& rate, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double flow = x[i] * rate(i, j);
      out[i] -= flow;
      out[j] += flow;
    }
  }
}

}  // namespace

double protocol_rate(const ProtocolKind& kind, std::span<const double> p,
                     std::span<const double> x, std::size_t i, std::size_t j) {
  check_dims(p, x);
  check_pair(x.size(), i, j);
  if (const auto* opt = std::get_if<OptimalPairwise>(&kind)) {
    return pairwise_rate(opt->scheme, p, x, i, j);
  }
  if (std::holds_alternative<SmithStatic>(kind)) {
    return positive_part(p[j] - p[i]);
  }
  const auto& cf = std::get<ClosedForm>(kind);
  WeightScheme scheme{equivalent_weight(cf.model), cf.graph, kDefaultWeightFloor};
  return pairwise_rate(scheme, p, x, i, j);
}

void ed_vector_field(const ProtocolKind& kind, std::span<const double> p,
                     std::span<const double> x, std::span<double> out) {
  check_dims(p, x);
  const std::size_t n = x.size();
  if (out.size() != n) throw InvalidInput("output buffer has the wrong size");
  if (const auto* opt = std::get_if<OptimalPairwise>(&kind)) {
    mass_balance(n, x, [&](std::size_t i, std::size_t j) {
      return pairwise_rate(opt->scheme, p, x, i, j);
    }, out);
    return;
  }
  if (std::holds_alternative<SmithStatic>(kind)) {
    mass_balance(n, x, [&](std::size_t i, std::size_t j) {
      return positive_part(p[j] - p[i]);
    }, out);
    return;
  }
  const auto& cf = std::get<ClosedForm>(kind);
  closed_form_field(cf.model, p, x, cf.graph, out);
}

Vec ed_vector_field(const ProtocolKind& kind, std::span<const double> p,
                    std::span<const double> x) {
  Vec out(x.size());
  ed_vector_field(kind, p, x, out);
  return out;
}

void closed_form_field(ClosedFormModel model, std::span<const double> p,
                       std::span<const double> x, const std::optional<MigrationGraph>& graph,
                       std::span<double> out) {
  check_dims(p, x);
  const std::size_t n = x.size();
  if (out.size() != n) throw InvalidInput("output buffer has the wrong size");
  if (graph && graph->size() != n) throw InvalidInput("migration graph size mismatch");
  const auto linked = [&](std::size_t i, std::size_t j) {
    return i != j && (!graph || graph->allows(i, j));
  };

  switch (model) {
    case ClosedFormModel::smith:
      for (std::size_t i = 0; i < n; ++i) {
        double inflow = 0.0;
        double outflow = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (!linked(i, j)) continue;
          inflow += x[j] * positive_part(p[i] - p[j]);
          outflow += positive_part(p[j] - p[i]);
        }
        out[i] = inflow - x[i] * outflow;
      }
      return;
    case ClosedFormModel::replicator:
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (linked(i, j)) s += x[j] * (p[i] - p[j]);
        }
        out[i] = x[i] * s;
      }
      return;
    case ClosedFormModel::projection:
      for (double xi : x) {
        if (!(xi >= kDefaultWeightFloor)) {
          throw DomainError("projection dynamics is only defined on the simplex interior");
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (linked(i, j)) s += p[i] - p[j];
        }
        out[i] = s;
      }
      return;
  }
}

Vec closed_form_field(ClosedFormModel model, std::span<const double> p,
                      std::span<const double> x, const std::optional<MigrationGraph>& graph) {
  Vec out(x.size());
  closed_form_field(model, p, x, graph, out);
  return out;
}

Trajectory integrate_forward(const ProtocolKind& kind, const Game& game,
                             const PopulationState& x0, const PayoffSource& source,
                             const TimeGrid& grid) {
  const std::size_t n = x0.size();
  if (game.strategies() != n) throw InvalidInput("initial state does not match the game");
  if (const auto* opt = std::get_if<OptimalPairwise>(&kind)) opt->scheme.validate(n);

  const Trajectory* frozen = nullptr;
  if (const auto* f = std::get_if<FrozenPayoff>(&source)) {
    frozen = &f->values.get();
    if (!(frozen->grid() == grid)) {
      throw InvalidInput("frozen payoff trajectory is on a different time grid");
    }
    if (frozen->dim() != n) throw InvalidInput("frozen payoff has the wrong dimension");
  }

  Vec p(n);
  const auto rhs = [&](double t, std::span<const double> x, std::span<double> out) {
    if (frozen) {
      frozen->at(t, p);
    } else {
      game.evaluate(x, p);
    }
    ed_vector_field(kind, p, x, out);
  };

  std::vector<Vec> nodes;
  nodes.reserve(grid.node_count());
  nodes.push_back(x0.masses());
  Vec x = x0.masses();
  detail::Rk4Workspace ws(n);
  const double h = grid.step();
  for (std::size_t k = 0; k < grid.intervals(); ++k) {
    const double t = grid.time(k);
    const double t_next = grid.time(k + 1);
    detail::rk4_step(rhs, t, 0.5 * (t + t_next), t_next, h, x, ws);
    for (double xi : x) {
      if (!std::isfinite(xi)) {
        throw NumericalFailure("forward integration produced a non-finite state at step " +
                               std::to_string(k + 1));
      }
    }
    x = renormalize_to_simplex(std::move(x));
    nodes.push_back(x);
  }
  return Trajectory(grid, std::move(nodes));
}

}  // namespace popmfg
