#include "ugs/raster/sh.hpp"

#include "ugs/core/error.hpp"

namespace ugs {

Eigen::Vector3d evaluate_sh(const double* coeffs, int degree,
                            const Eigen::Vector3d& view_dir) {
  if (degree != 0 && degree != 1)
    throw Error(ErrorCode::kConfig, "SH degree must be 0 or 1");
  Eigen::Vector3d rgb(coeffs[0], coeffs[1], coeffs[2]);
  if (degree == 1) {
    const double x = view_dir.x(), y = view_dir.y(), z = view_dir.z();
    for (int c = 0; c < 3; ++c)
      rgb[c] += kSH1 * (-y * coeffs[3 + c] + z * coeffs[6 + c] -
                        x * coeffs[9 + c]);
  }
  return rgb;
}

void evaluate_sh_backward(const double* coeffs, int degree,
                          const Eigen::Vector3d& view_dir,
                          const Eigen::Vector3d& upstream, double* d_coeffs,
                          Eigen::Vector3d* d_view_dir) {
  if (degree != 0 && degree != 1)
    throw Error(ErrorCode::kConfig, "SH degree must be 0 or 1");
  for (int c = 0; c < 3; ++c) d_coeffs[c] += upstream[c];
  if (d_view_dir) d_view_dir->setZero();
  if (degree == 0) return;

  const double x = view_dir.x(), y = view_dir.y(), z = view_dir.z();
  for (int c = 0; c < 3; ++c) {
    d_coeffs[3 + c] += upstream[c] * kSH1 * -y;
    d_coeffs[6 + c] += upstream[c] * kSH1 * z;
    d_coeffs[9 + c] += upstream[c] * kSH1 * -x;
    if (d_view_dir) {
      (*d_view_dir).x() += upstream[c] * kSH1 * -coeffs[9 + c];
      (*d_view_dir).y() += upstream[c] * kSH1 * -coeffs[3 + c];
      (*d_view_dir).z() += upstream[c] * kSH1 * coeffs[6 + c];
    }
  }
}

}  // namespace ugs
