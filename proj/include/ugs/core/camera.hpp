#pragma once

#include <Eigen/Dense>

namespace ugs {

/// Pinhole camera: intrinsics in pixels and a rigid world-to-camera
/// transform. The camera looks down +z in its own frame.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Matrix4d world_to_camera = Eigen::Matrix4d::Identity();
  double near_clip = 0.1;

  /// Throws ugs::Error on non-positive dims/near_clip or a rotation block
  /// that is not orthonormal within 1e-6.
  void validate() const;

  Eigen::Matrix3d rotation() const {
    return world_to_camera.topLeftCorner<3, 3>();
  }
  Eigen::Vector3d translation() const {
    return world_to_camera.topRightCorner<3, 1>();
  }
  /// Camera centre in world coordinates.
  Eigen::Vector3d centre() const {
    return -rotation().transpose() * translation();
  }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const {
    return rotation() * p_world + translation();
  }
};

/// Unit vector from the camera centre towards a world point. Throws a
/// degenerate-direction error when the point coincides with the centre.
Eigen::Vector3d view_direction(const Camera& camera,
                               const Eigen::Vector3d& position);

/// A camera that looks at `target` from `eye` with the given up hint.
Camera make_look_at_camera(const Eigen::Vector3d& eye,
                           const Eigen::Vector3d& target,
                           const Eigen::Vector3d& up, double fx, double fy,
                           int width, int height);

}  // namespace ugs
