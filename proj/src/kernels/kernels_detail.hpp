#pragma once

#include <cmath>

#include "ugs/kernels/kernels.hpp"

namespace ugs::kernels::detail {

// Single-pixel blend step shared by the scalar loop and the SIMD tail.
// Operation order here is the contract: the vector variants replicate it
// lane-for-lane so both backends produce identical bits.
inline void blend_pixel(const RowBlend& g, int x, double pixel_y, double& t,
                        double& ar, double& ag, double& ab, double& aw,
                        double& ws) {
  if (t < g.t_min) return;
  const double dx = (static_cast<double>(x) + 0.5) - g.mean_x;
  const double dy = pixel_y - g.mean_y;
  const double power =
      -0.5 * (g.inv_a * dx * dx + g.inv_c * dy * dy) - g.inv_b * dx * dy;
  if (power < kMinLogWeight) return;
  const double w = std::exp(power);
  const double alpha = g.opacity * w;
  const double contrib = t * alpha;
  ar += contrib * g.colour[0];
  ag += contrib * g.colour[1];
  ab += contrib * g.colour[2];
  aw += contrib;
  ws += contrib;
  t *= 1.0 - alpha;
}

}  // namespace ugs::kernels::detail
