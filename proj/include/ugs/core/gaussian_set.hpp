#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace ugs {

/// Structure-of-arrays of the learnable per-Gaussian parameters.
///
/// Storage conventions:
///  - rotations are quaternions in w-x-y-z order, kept unit-norm by
///    renormalize_rotations() after every optimizer step;
///  - scales are stored as logs and exponentiated where a positive scale is
///    needed;
///  - opacity is stored as a logit; sigmoid(opacity_logit) is the alpha used
///    everywhere downstream;
///  - colours hold SH coefficients, 3*(degree+1)^2 per Gaussian, DC first.
struct GaussianSet {
  int sh_degree = 0;
  std::vector<double> positions;       // 3 per Gaussian
  std::vector<double> rotations;       // 4 per Gaussian (w,x,y,z)
  std::vector<double> log_scales;      // 3 per Gaussian
  std::vector<double> opacity_logits;  // 1 per Gaussian
  std::vector<double> colours;         // colour_dim() per Gaussian

  std::size_t count() const { return opacity_logits.size(); }
  int colour_dim() const { return 3 * (sh_degree + 1) * (sh_degree + 1); }

  void resize(std::size_t n);
  /// Throws when array lengths disagree or sh_degree is not in {0,1}.
  void validate() const;

  Eigen::Map<const Eigen::Vector3d> position(std::size_t i) const {
    return Eigen::Map<const Eigen::Vector3d>(&positions[3 * i]);
  }
  Eigen::Map<const Eigen::Vector4d> rotation(std::size_t i) const {
    return Eigen::Map<const Eigen::Vector4d>(&rotations[4 * i]);
  }
  Eigen::Map<const Eigen::Vector3d> log_scale(std::size_t i) const {
    return Eigen::Map<const Eigen::Vector3d>(&log_scales[3 * i]);
  }
  const double* colour(std::size_t i) const {
    return &colours[static_cast<std::size_t>(colour_dim()) * i];
  }
  double opacity(std::size_t i) const;

  /// Projects every quaternion back onto the unit sphere. Idempotent.
  void renormalize_rotations();

  /// Removes the Gaussians whose indices are listed (sorted ascending).
  void remove(const std::vector<std::size_t>& sorted_indices);
};

}  // namespace ugs
