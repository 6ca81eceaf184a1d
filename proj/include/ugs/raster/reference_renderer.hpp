#pragma once

#include <span>

#include "ugs/raster/rasterizer.hpp"

namespace ugs {

/// Brute-force reference renderer: shares the projection stage, then blends
/// every pixel against ALL visible Gaussians in one global depth-sorted
/// order, with its own covariance/weight arithmetic. No tiles and no early
/// termination. Serves as the blending oracle for the tiled renderer and as
/// the fixture-image generator.
struct ReferenceRender {
  ImageBuffer image;                  // clipped
  std::vector<double> raw;            // pre-clip, 3*w*h
  std::vector<double> transmittance;  // w*h
};

ReferenceRender reference_render(const GaussianSet& gaussians,
                                 const Camera& camera,
                                 std::span<const double> effective_opacities,
                                 const RenderConfig& config);

}  // namespace ugs
