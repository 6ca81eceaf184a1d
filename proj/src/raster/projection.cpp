#include "ugs/raster/projection.hpp"

#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/raster/sh.hpp"

namespace ugs {

namespace {

Eigen::Vector4d normalized_quat(const Eigen::Vector4d& q) {
  const double n = q.norm();
  if (n <= 0.0)
    throw Error(ErrorCode::kDomain, "zero quaternion has no rotation");
  return q / n;
}

Eigen::Matrix3d rotation_from_unit(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// dR/dq for a unit quaternion, one 3x3 slice per component (w,x,y,z).
void rotation_jacobian(const Eigen::Vector4d& q, Eigen::Matrix3d dr[4]) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  dr[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  dr[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  dr[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  dr[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  for (int k = 0; k < 4; ++k) dr[k] *= 2.0;
}

}  // namespace

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& quaternion) {
  return rotation_from_unit(normalized_quat(quaternion));
}

Eigen::Matrix3d build_covariance(const Eigen::Vector4d& quaternion,
                                 const Eigen::Vector3d& log_scale) {
  const Eigen::Matrix3d r = quaternion_to_matrix(quaternion);
  const Eigen::Vector3d s = log_scale.array().exp();
  const Eigen::Matrix3d m = r * s.asDiagonal();
  return m * m.transpose();
}

void support_range(double mean, double radius, int limit, int* lo, int* hi) {
  int a = static_cast<int>(std::ceil(mean - radius - 0.5));
  int b = static_cast<int>(std::floor(mean + radius - 0.5)) + 1;
  a = std::max(a, 0);
  b = std::min(b, limit);
  if (b < a) b = a;
  *lo = a;
  *hi = b;
}

ProjectionOutcome project_gaussian(
    const Eigen::Vector3d& position, const Eigen::Vector4d& quaternion,
    const Eigen::Vector3d& log_scale, const double* colour_coeffs,
    int sh_degree, double alpha, const Camera& camera,
    const ProjectionConfig& config, ProjectedGaussian* out) {
  const Eigen::Vector3d t = camera.to_camera(position);
  if (!t.allFinite() || t.z() <= camera.near_clip)
    return ProjectionOutcome::kCulled;

  const double iz = 1.0 / t.z();
  const Eigen::Vector2d mean2d(camera.fx * t.x() * iz + camera.cx,
                               camera.fy * t.y() * iz + camera.cy);

  Eigen::Matrix<double, 2, 3> j = Eigen::Matrix<double, 2, 3>::Zero();
  j(0, 0) = camera.fx * iz;
  j(0, 2) = -camera.fx * t.x() * iz * iz;
  j(1, 1) = camera.fy * iz;
  j(1, 2) = -camera.fy * t.y() * iz * iz;

  const Eigen::Matrix3d sigma = build_covariance(quaternion, log_scale);
  if (!sigma.allFinite()) return ProjectionOutcome::kSingular;
  const Eigen::Matrix<double, 2, 3> m = j * camera.rotation();
  const Eigen::Matrix2d cov = m * sigma * m.transpose();

  const double a = cov(0, 0) + config.lowpass_floor;
  const double b = cov(0, 1);
  const double c = cov(1, 1) + config.lowpass_floor;

  const double mid = 0.5 * (a + c);
  const double disc =
      std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
  const double lambda_max = mid + disc;
  const double lambda_min = mid - disc;
  const double det = a * c - b * b;
  if (!(lambda_min > 0.0) || !(det > 0.0) ||
      lambda_max > config.condition_limit * lambda_min)
    return ProjectionOutcome::kSingular;

  const double radius = config.sigma_cutoff * std::sqrt(lambda_max);
  int x0, x1, y0, y1;
  support_range(mean2d.x(), radius, camera.width, &x0, &x1);
  support_range(mean2d.y(), radius, camera.height, &y0, &y1);
  if (x0 >= x1 || y0 >= y1) return ProjectionOutcome::kCulled;

  out->mean2d = mean2d;
  out->cov_a = a;
  out->cov_b = b;
  out->cov_c = c;
  out->inv_a = c / det;
  out->inv_b = -b / det;
  out->inv_c = a / det;
  out->depth = t.z();
  out->radius = radius;
  out->view_dir = view_direction(camera, position);
  out->colour = evaluate_sh(colour_coeffs, sh_degree, out->view_dir);
  out->alpha = alpha;
  return ProjectionOutcome::kVisible;
}

void project_gaussian_backward(
    const Eigen::Vector3d& position, const Eigen::Vector4d& quaternion,
    const Eigen::Vector3d& log_scale, const double* colour_coeffs,
    int sh_degree, const Camera& camera, const ProjectedGaussian& projected,
    const Eigen::Vector2d& d_mean2d, double d_cov_a, double d_cov_b,
    double d_cov_c, const Eigen::Vector3d& d_colour, ProjectionGrads* grads,
    double* d_colour_coeffs) {
  const Eigen::Vector3d t = camera.to_camera(position);
  const double iz = 1.0 / t.z();

  Eigen::Matrix<double, 2, 3> j = Eigen::Matrix<double, 2, 3>::Zero();
  j(0, 0) = camera.fx * iz;
  j(0, 2) = -camera.fx * t.x() * iz * iz;
  j(1, 1) = camera.fy * iz;
  j(1, 2) = -camera.fy * t.y() * iz * iz;

  const Eigen::Vector4d qn = normalized_quat(quaternion);
  const Eigen::Matrix3d r3 = rotation_from_unit(qn);
  const Eigen::Vector3d s = log_scale.array().exp();
  const Eigen::Matrix3d m3 = r3 * s.asDiagonal();
  const Eigen::Matrix3d sigma = m3 * m3.transpose();
  const Eigen::Matrix<double, 2, 3> m = j * camera.rotation();

  // Screen-covariance chain. d_cov_b covers both symmetric off-diagonals.
  Eigen::Matrix2d gc;
  gc << d_cov_a, 0.5 * d_cov_b, 0.5 * d_cov_b, d_cov_c;

  const Eigen::Matrix3d d_sigma = m.transpose() * gc * m;
  const Eigen::Matrix<double, 2, 3> d_m = 2.0 * gc * m * sigma;
  const Eigen::Matrix<double, 2, 3> d_j =
      d_m * camera.rotation().transpose();

  Eigen::Vector3d d_t = Eigen::Vector3d::Zero();
  const double fx = camera.fx, fy = camera.fy;
  d_t.x() += d_j(0, 2) * (-fx * iz * iz);
  d_t.y() += d_j(1, 2) * (-fy * iz * iz);
  d_t.z() += d_j(0, 0) * (-fx * iz * iz) + d_j(1, 1) * (-fy * iz * iz) +
             d_j(0, 2) * (2.0 * fx * t.x() * iz * iz * iz) +
             d_j(1, 2) * (2.0 * fy * t.y() * iz * iz * iz);

  // Pixel-space mean.
  d_t.x() += d_mean2d.x() * fx * iz;
  d_t.z() += d_mean2d.x() * (-fx * t.x() * iz * iz);
  d_t.y() += d_mean2d.y() * fy * iz;
  d_t.z() += d_mean2d.y() * (-fy * t.y() * iz * iz);

  grads->d_position += camera.rotation().transpose() * d_t;

  // Colour: SH coefficients plus the view-direction path back to position.
  Eigen::Vector3d d_view = Eigen::Vector3d::Zero();
  evaluate_sh_backward(colour_coeffs, sh_degree, projected.view_dir, d_colour,
                       d_colour_coeffs, &d_view);
  const double dist = (position - camera.centre()).norm();
  const Eigen::Vector3d v = projected.view_dir;
  grads->d_position += (d_view - v * v.dot(d_view)) / dist;

  // 3D covariance to rotation and scale.
  const Eigen::Matrix3d d_m3 = 2.0 * d_sigma * m3;
  const Eigen::Matrix3d d_r3 = d_m3 * s.asDiagonal();
  const Eigen::Matrix3d rt_dm3 = r3.transpose() * d_m3;
  for (int k = 0; k < 3; ++k)
    grads->d_log_scale[k] += s[k] * rt_dm3(k, k);

  Eigen::Matrix3d dr[4];
  rotation_jacobian(qn, dr);
  Eigen::Vector4d d_qn;
  for (int k = 0; k < 4; ++k)
    d_qn[k] = (d_r3.array() * dr[k].array()).sum();

  const double norm = quaternion.norm();
  grads->d_quaternion += (d_qn - qn * qn.dot(d_qn)) / norm;
}

}  // namespace ugs
