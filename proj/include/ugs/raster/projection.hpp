#pragma once

#include <Eigen/Dense>
#include <optional>

#include "ugs/core/camera.hpp"

namespace ugs {

/// 3D covariance from a unit quaternion (w,x,y,z) and per-axis log scales:
/// R * S * S^T * R^T with S = diag(exp(log_scale)). The quaternion is
/// normalized internally, so callers may pass slightly-off-unit values.
Eigen::Matrix3d build_covariance(const Eigen::Vector4d& quaternion,
                                 const Eigen::Vector3d& log_scale);

/// Rotation matrix of a quaternion (normalized internally).
Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& quaternion);

/// A Gaussian after projection to the image plane.
struct ProjectedGaussian {
  std::size_t index = 0;          // into the source GaussianSet
  Eigen::Vector2d mean2d;         // pixel coordinates
  double cov_a = 0, cov_b = 0, cov_c = 0;  // screen covariance (low-pass floored)
  double inv_a = 0, inv_b = 0, inv_c = 0;  // its inverse
  double depth = 0;               // camera-space z
  double radius = 0;              // sigma_cutoff * sqrt(max eigenvalue)
  Eigen::Vector3d colour;         // SH-evaluated RGB along the view direction
  Eigen::Vector3d view_dir;       // unit, camera centre -> Gaussian
  double alpha = 0;               // effective opacity used for blending
};

struct ProjectionConfig {
  double sigma_cutoff = 3.0;
  double lowpass_floor = 0.3;     // px^2 added to the screen covariance diagonal
  double condition_limit = 1e12;  // screen covariance conditioning guard
};

enum class ProjectionOutcome { kVisible, kCulled, kSingular };

/// Projects one Gaussian. `colour_coeffs` holds 3*(degree+1)^2 SH values.
/// Culled = behind the near plane or supported entirely outside the image.
/// Singular = screen covariance unusable even after the low-pass floor.
ProjectionOutcome project_gaussian(
    const Eigen::Vector3d& position, const Eigen::Vector4d& quaternion,
    const Eigen::Vector3d& log_scale, const double* colour_coeffs,
    int sh_degree, double alpha, const Camera& camera,
    const ProjectionConfig& config, ProjectedGaussian* out);

/// Pixel-index range [x0, x1) whose centres fall within `radius` of `mean`
/// along one axis, clamped to [0, limit). The same rule defines the Gaussian's
/// support for the tiled renderer and the brute-force reference.
void support_range(double mean, double radius, int limit, int* lo, int* hi);

/// Gradients flowing back through project_gaussian. `d_cov` is w.r.t. the
/// floored screen covariance (a, b, c), `d_colour` w.r.t. the emitted RGB,
/// `d_mean2d` w.r.t. the pixel-space mean.
struct ProjectionGrads {
  Eigen::Vector3d d_position = Eigen::Vector3d::Zero();
  Eigen::Vector4d d_quaternion = Eigen::Vector4d::Zero();
  Eigen::Vector3d d_log_scale = Eigen::Vector3d::Zero();
  // d_colour_coeffs sized by the caller (3*(degree+1)^2)
};

void project_gaussian_backward(
    const Eigen::Vector3d& position, const Eigen::Vector4d& quaternion,
    const Eigen::Vector3d& log_scale, const double* colour_coeffs,
    int sh_degree, const Camera& camera, const ProjectedGaussian& projected,
    const Eigen::Vector2d& d_mean2d, double d_cov_a, double d_cov_b,
    double d_cov_c, const Eigen::Vector3d& d_colour, ProjectionGrads* grads,
    double* d_colour_coeffs);

}  // namespace ugs
