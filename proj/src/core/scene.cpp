#include "ugs/core/scene.hpp"

#include <fstream>
#include <json.hpp>

#include "ugs/core/error.hpp"
#include "ugs/core/ply.hpp"

namespace ugs {

using nlohmann::json;

void Scene::validate() const {
  gaussians.validate();
  if (train_views.empty())
    throw Error(ErrorCode::kConfig, "scene has no train views");
  for (const View& v : train_views) v.camera.validate();
  for (const View& v : test_views) v.camera.validate();
  for (std::size_t i = 0; i < gaussians.count(); ++i) {
    const Eigen::Vector3d p = gaussians.position(i);
    for (int k = 0; k < 3; ++k) {
      if (p[k] < metadata.box_min[k] || p[k] > metadata.box_max[k])
        throw Error(ErrorCode::kDomain,
                    "Gaussian " + std::to_string(i) +
                        " lies outside the scene bounding box");
    }
  }
}

namespace {

Eigen::Vector3d vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::kConfig,
                std::string(what) + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Camera camera_from(const json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  if (j.contains("near_clip")) cam.near_clip = j["near_clip"].get<double>();
  const json& m = j.at("world_to_camera");
  if (!m.is_array() || m.size() != 16)
    throw Error(ErrorCode::kConfig,
                "world_to_camera must hold 16 numbers (row-major)");
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      cam.world_to_camera(r, c) = m[4 * r + c].get<double>();
  cam.validate();
  return cam;
}

}  // namespace

Scene load_scene(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in)
    throw Error(ErrorCode::kIo,
                "cannot open scene config '" + config_path.string() + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "scene config '" + config_path.string() +
                                       "': " + e.what());
  }

  const auto base = config_path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  Scene scene;
  try {
    scene.metadata.name = cfg.value("name", "scene");
    const int sh_degree = cfg.value("sh_degree", 0);
    Eigen::Vector3d colour_default(0.5, 0.5, 0.5);
    if (cfg.contains("colour_default"))
      colour_default = vec3_from(cfg["colour_default"], "colour_default");

    const std::string points_path = cfg.at("points_path").get<std::string>();
    scene.gaussians =
        ingest_point_cloud(resolve(points_path), colour_default, sh_degree);

    for (const json& jv : cfg.at("views")) {
      View view;
      view.camera = camera_from(jv.at("camera"));
      const std::string image_path = jv.at("image").get<std::string>();
      view.image = load_png(resolve(image_path));
      if (view.image.width != view.camera.width ||
          view.image.height != view.camera.height)
        throw Error(ErrorCode::kDimension,
                    "image '" + image_path + "' is " +
                        std::to_string(view.image.width) + "x" +
                        std::to_string(view.image.height) +
                        " but the camera expects " +
                        std::to_string(view.camera.width) + "x" +
                        std::to_string(view.camera.height));
      const std::string split = jv.value("split", "train");
      if (split == "train")
        scene.train_views.push_back(std::move(view));
      else if (split == "test")
        scene.test_views.push_back(std::move(view));
      else
        throw Error(ErrorCode::kConfig, "unknown split '" + split + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "scene config '" + config_path.string() +
                                        "': " + e.what());
  }

  // Bounding box: start from the config box when present, then grow to hold
  // every point with a 10% margin so encoder clamping stays a no-op at init.
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-1e300);
  for (std::size_t i = 0; i < scene.gaussians.count(); ++i) {
    lo = lo.cwiseMin(scene.gaussians.position(i));
    hi = hi.cwiseMax(scene.gaussians.position(i));
  }
  const Eigen::Vector3d margin =
      ((hi - lo).cwiseMax(1e-3) * 0.1).cwiseMax(1e-3);
  lo -= margin;
  hi += margin;
  if (cfg.contains("bounding_box")) {
    const json& bb = cfg["bounding_box"];
    lo = lo.cwiseMin(vec3_from(bb.at("min"), "bounding_box.min"));
    hi = hi.cwiseMax(vec3_from(bb.at("max"), "bounding_box.max"));
  }
  scene.metadata.box_min = lo;
  scene.metadata.box_max = hi;

  scene.validate();
  return scene;
}

}  // namespace ugs
