#pragma once

#include <span>

#include "popmfg/core.hpp"

namespace popmfg {

// dv_i/dt = -1/2 sum_{j != i, permitted} [v_j - v_i]_+^2 / q_ij(x) - F_i(x).
// This is the closed-form minimiser of the agent Hamiltonian; the optimal
// switch rate is [v_j - v_i]_+ / q_ij.
void hj_rhs(const Game& game, const WeightScheme& scheme, std::span<const double> v,
            std::span<const double> x, std::span<double> out);
Vec hj_rhs(const Game& game, const WeightScheme& scheme, std::span<const double> v,
           std::span<const double> x);

// Sets v(T) = F(x(T)) and integrates the payoff dynamics back to t0 along the
// frozen state trajectory. Integration runs forward in tau = T - t.
ValueTrajectory integrate_backward(const Game& game, const WeightScheme& scheme,
                                   const Trajectory& x_frozen, const TimeGrid& grid);

}  // namespace popmfg
