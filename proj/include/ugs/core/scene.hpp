#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "ugs/core/camera.hpp"
#include "ugs/core/gaussian_set.hpp"
#include "ugs/core/image.hpp"

namespace ugs {

struct View {
  Camera camera;
  ImageBuffer image;
};

struct SceneMetadata {
  std::string name;
  Eigen::Vector3d box_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d box_max = Eigen::Vector3d::Ones();
};

struct Scene {
  GaussianSet gaussians;
  std::vector<View> train_views;
  std::vector<View> test_views;
  SceneMetadata metadata;

  void validate() const;
};

/// Loads a scene from a JSON config:
///   {
///     "name": ...,
///     "points_path": "points.ply",
///     "sh_degree": 0,
///     "colour_default": [r,g,b],
///     "bounding_box": {"min": [..], "max": [..]},   // optional
///     "views": [ {"image": "v0.png", "split": "train"|"test",
///                 "camera": {fx,fy,cx,cy,width,height,
///                            world_to_camera (16 row-major), near_clip}} ]
///   }
/// Relative paths are resolved against the config directory. When the
/// bounding box is absent (or too small) it grows to hold every point with a
/// 10% margin.
Scene load_scene(const std::filesystem::path& config_path);

}  // namespace ugs
