#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "ugs/core/camera.hpp"
#include "ugs/core/gaussian_set.hpp"
#include "ugs/core/image.hpp"
#include "ugs/raster/projection.hpp"

namespace ugs {

struct RenderConfig {
  int tile_size = 16;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  /// Per-pixel early termination threshold. Must be 0 for renders that feed
  /// render_backward (the backward traversal reconstructs transmittance
  /// exactly and cannot model skipped tails).
  double transmittance_min = 1e-4;
  ProjectionConfig projection;
  int threads = 1;  // tile workers; results are thread-count invariant
};

struct RenderOutput {
  ImageBuffer image;                  // final, clipped to [0,1]
  std::vector<double> raw;            // pre-clip blend result, 3*w*h
  std::vector<double> transmittance;  // final T per pixel, w*h
  std::vector<double> weight_image;   // per-pixel sum of blend weights, w*h
  /// Per input Gaussian: total blend weight over all pixels (diagnostics).
  std::vector<double> gaussian_weight_sums;
  std::uint64_t n_visible = 0;
  std::uint64_t n_culled = 0;
  std::uint64_t n_singular = 0;  // skipped: unusable screen covariance

  /// Forward state retained for the backward pass.
  struct State {
    bool retained = false;
    double transmittance_min = 0.0;
    int tiles_x = 0, tiles_y = 0;
    std::vector<ProjectedGaussian> projected;           // gaussian-index order
    std::vector<std::vector<std::uint32_t>> tile_lists;  // depth-sorted
  } state;
};

/// Tile-based forward render. Gaussians overlapping a tile are sorted by
/// (depth, index) and alpha-blended front to back; the per-pixel footprint is
/// the density of the projected Gaussian times its effective opacity.
RenderOutput render(const GaussianSet& gaussians, const Camera& camera,
                    std::span<const double> effective_opacities,
                    const RenderConfig& config);

struct RenderGrads {
  std::vector<double> d_positions;            // 3N
  std::vector<double> d_rotations;            // 4N
  std::vector<double> d_log_scales;           // 3N
  std::vector<double> d_colours;              // colour_dim * N
  std::vector<double> d_effective_opacities;  // N
};

/// Reverse pass via back-to-front re-traversal of the retained forward
/// state. `upstream` is d(loss)/d(image) on the clipped image, 3*w*h.
/// Requires a forward pass rendered with transmittance_min == 0.
RenderGrads render_backward(const GaussianSet& gaussians, const Camera& camera,
                            const RenderOutput& output,
                            std::span<const double> upstream,
                            const RenderConfig& config);

}  // namespace ugs
