#pragma once

#include <Eigen/Dense>

namespace ugs {

// Real SH band-1 basis constant, sqrt(3/(4*pi)).
inline constexpr double kSH1 = 0.4886025119029199;

/// Evaluates the per-Gaussian colour along a unit view direction.
/// Degree 0: the DC coefficients pass through unchanged. Degree 1 adds the
/// three linear bands with the standard graphics convention
///   rgb += kSH1 * (-y*c1 + z*c2 - x*c3).
/// The result is linear and unclamped; negative values are legal and the
/// renderer clips only the final image.
Eigen::Vector3d evaluate_sh(const double* coeffs, int degree,
                            const Eigen::Vector3d& view_dir);

/// Gradients w.r.t. the coefficients (accumulated into d_coeffs, length
/// 3*(degree+1)^2) and the view direction.
void evaluate_sh_backward(const double* coeffs, int degree,
                          const Eigen::Vector3d& view_dir,
                          const Eigen::Vector3d& upstream, double* d_coeffs,
                          Eigen::Vector3d* d_view_dir);

}  // namespace ugs
