#include "ugs/core/camera.hpp"

#include "ugs/core/error.hpp"

namespace ugs {

void Camera::validate() const {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::kDimension, "camera width/height must be positive");
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::kDomain, "focal lengths must be positive");
  if (!(near_clip > 0.0))
    throw Error(ErrorCode::kDomain, "near_clip must be positive");
  const Eigen::Matrix3d r = rotation();
  const double dev = (r * r.transpose() - Eigen::Matrix3d::Identity())
                         .cwiseAbs()
                         .maxCoeff();
  if (dev > 1e-6)
    throw Error(ErrorCode::kDomain,
                "world_to_camera rotation block is not orthonormal "
                "(max deviation " +
                    std::to_string(dev) + ")");
  const Eigen::RowVector4d bottom = world_to_camera.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::kDomain,
                "world_to_camera last row must be [0 0 0 1]");
}

Eigen::Vector3d view_direction(const Camera& camera,
                               const Eigen::Vector3d& position) {
  const Eigen::Vector3d d = position - camera.centre();
  const double norm = d.norm();
  if (norm < 1e-12)
    throw Error(ErrorCode::kDegenerate,
                "view direction undefined: position coincides with the "
                "camera centre");
  return d / norm;
}

Camera make_look_at_camera(const Eigen::Vector3d& eye,
                           const Eigen::Vector3d& target,
                           const Eigen::Vector3d& up, double fx, double fy,
                           int width, int height) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Eigen::Vector3d(1, 0, 0));
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right).normalized();

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.width = width;
  cam.height = height;
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  cam.world_to_camera.setIdentity();
  cam.world_to_camera.topLeftCorner<3, 3>() = r;
  cam.world_to_camera.topRightCorner<3, 1>() = -r * eye;
  return cam;
}

}  // namespace ugs
