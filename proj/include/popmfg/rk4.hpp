#pragma once

#include <cstddef>
#include <span>

#include "popmfg/core.hpp"

namespace popmfg::detail {

// Scratch buffers for classical RK4 on a fixed-size state.
struct Rk4Workspace {
  explicit Rk4Workspace(std::size_t n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
  Vec k1, k2, k3, k4, tmp;
};

// One RK4 step of y' = f(t, y) from (t, y) to t + h, in place.
// `rhs(t, y, out)` fills out with f(t, y). Stage times are passed explicitly
// so callers can keep them on grid nodes and midpoints.
template <class Rhs>
void rk4_step(Rhs&& rhs, double t, double t_mid, double t_next, double h, Vec& y,
              Rk4Workspace& ws) {
  const std::size_t n = y.size();
  rhs(t, std::span<const double>(y), std::span<double>(ws.k1));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + 0.5 * h * ws.k1[i];
  rhs(t_mid, std::span<const double>(ws.tmp), std::span<double>(ws.k2));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + 0.5 * h * ws.k2[i];
  rhs(t_mid, std::span<const double>(ws.tmp), std::span<double>(ws.k3));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + h * ws.k3[i];
  rhs(t_next, std::span<const double>(ws.tmp), std::span<double>(ws.k4));
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
  }
}

}  // namespace popmfg::detail
