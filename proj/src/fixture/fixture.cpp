#include "ugs/fixture/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"
#include "ugs/core/ply.hpp"
#include "ugs/core/rng.hpp"
#include "ugs/raster/reference_renderer.hpp"

namespace ugs {

namespace {
enum Stream : std::uint64_t {
  kPos = 1,
  kScale,
  kRot,
  kOpacity,
  kColour,
  kDrop,
  kNoise,
  kSpurious,
};

Camera ring_camera(double angle, double elevation, int image_size) {
  const double radius = 4.0;
  const Eigen::Vector3d eye(radius * std::cos(angle) * std::cos(elevation),
                            radius * std::sin(angle) * std::cos(elevation),
                            radius * std::sin(elevation));
  return make_look_at_camera(eye, Eigen::Vector3d::Zero(),
                             Eigen::Vector3d(0, 0, 1), 40.0 / 32 * image_size,
                             40.0 / 32 * image_size, image_size, image_size);
}

}  // namespace

FixtureSpec fixture_preset(const std::string& name, std::uint64_t seed) {
  FixtureSpec spec;
  spec.seed = seed;
  if (name == "basic") {
    spec.n_gaussians = 3;
    spec.n_train_views = 3;
    spec.n_test_views = 1;
  } else if (name == "convergence") {
    spec.n_gaussians = 20;
    spec.n_train_views = 8;
    spec.n_test_views = 2;
  } else if (name == "overfit") {
    // Sparse-view ambiguity regime: a handheld-style burst of 5 cameras on a
    // ~14 degree arc, test cameras extrapolating past its end, and a heavily
    // degraded initialization (noisy survivors of the true points plus 2x
    // spurious points). Dense enough that no single Gaussian dominates a
    // view.
    spec.n_gaussians = 224;
    spec.n_train_views = 5;
    spec.n_test_views = 3;
    spec.image_size = 32;
    spec.opacity_lo = 0.20;
    spec.opacity_hi = 0.45;
    spec.train_arc = 0.25;
    spec.test_spread = 0.45;
    spec.init_position_noise = 0.25;
    spec.dropped_fraction = 0.30;
    spec.spurious_fraction = 2.0;
  } else {
    throw Error(ErrorCode::kConfig, "unknown fixture preset '" + name + "'");
  }
  return spec;
}

Fixture make_fixture(const FixtureSpec& spec) {
  if (spec.n_gaussians < 1 || spec.n_train_views < 1 || spec.image_size < 4)
    throw Error(ErrorCode::kConfig, "fixture spec out of range");
  const CounterRng rng(spec.seed);

  GaussianSet truth;
  truth.sh_degree = spec.sh_degree;
  truth.resize(spec.n_gaussians);
  const int cdim = truth.colour_dim();
  for (int i = 0; i < spec.n_gaussians; ++i) {
    for (int k = 0; k < 3; ++k) {
      double p = 0.6 * rng.normal(kPos, i, k);
      truth.positions[3 * i + k] = std::clamp(p, -1.2, 1.2);
    }
    const double scale = 0.06 + 0.10 * rng.uniform(kScale, i);
    for (int k = 0; k < 3; ++k)
      truth.log_scales[3 * i + k] =
          std::log(scale) + 0.3 * (rng.uniform(kScale, i, 16 + k) - 0.5);
    Eigen::Vector4d q;
    for (int k = 0; k < 4; ++k) q[k] = rng.normal(kRot, i, k);
    q.normalize();
    for (int k = 0; k < 4; ++k) truth.rotations[4 * i + k] = q[k];
    truth.opacity_logits[i] =
        logit(spec.opacity_lo +
              (spec.opacity_hi - spec.opacity_lo) * rng.uniform(kOpacity, i));
    for (int k = 0; k < 3; ++k)
      truth.colours[static_cast<std::size_t>(cdim) * i + k] =
          0.15 + 0.75 * rng.uniform(kColour, i, k);
    // Higher SH bands (when present) stay zero: view-independent truth.
  }

  // Ground-truth views from the reference renderer with raw opacities.
  std::vector<double> alphas(truth.count());
  for (std::size_t i = 0; i < truth.count(); ++i) alphas[i] = truth.opacity(i);

  Fixture fx;
  fx.truth = truth;
  RenderConfig rc;  // black background, default projection
  const bool full_ring = spec.train_arc >= 2.0 * M_PI - 1e-9;
  const int total_views = spec.n_train_views + spec.n_test_views;
  for (int v = 0; v < total_views; ++v) {
    const bool is_test = v >= spec.n_train_views;
    double angle, elevation;
    if (!is_test) {
      angle = full_ring ? 2.0 * M_PI * v / spec.n_train_views
                        : spec.train_arc * v /
                              std::max(1, spec.n_train_views - 1);
      elevation = (v % 2 == 0) ? 0.22 : -0.18;
    } else {
      const int t = v - spec.n_train_views;
      angle = full_ring
                  ? 2.0 * M_PI * (t + 0.5) / std::max(1, spec.n_test_views)
                  : spec.train_arc + (t + 1) * spec.test_spread;
      elevation = 0.05;
    }
    View view;
    view.camera = ring_camera(angle, elevation, spec.image_size);
    view.image =
        reference_render(truth, view.camera, alphas, rc).image;
    if (is_test)
      fx.scene.test_views.push_back(std::move(view));
    else
      fx.scene.train_views.push_back(std::move(view));
  }

  // Initialization points: degraded copy of the truth.
  PointCloud init;
  for (int i = 0; i < spec.n_gaussians; ++i) {
    if (rng.uniform(kDrop, i) < spec.dropped_fraction) continue;
    Eigen::Vector3d p = truth.position(i);
    for (int k = 0; k < 3; ++k)
      p[k] += spec.init_position_noise * rng.normal(kNoise, i, k);
    init.points.push_back(p);
    init.colours.emplace_back(
        truth.colours[static_cast<std::size_t>(cdim) * i + 0],
        truth.colours[static_cast<std::size_t>(cdim) * i + 1],
        truth.colours[static_cast<std::size_t>(cdim) * i + 2]);
  }
  const int n_spurious =
      static_cast<int>(std::floor(spec.spurious_fraction * spec.n_gaussians));
  for (int i = 0; i < n_spurious; ++i) {
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k)
      p[k] = -1.2 + 2.4 * rng.uniform(kSpurious, i, k);
    init.points.push_back(p);
    init.colours.emplace_back(rng.uniform(kSpurious, i, 8),
                              rng.uniform(kSpurious, i, 9),
                              rng.uniform(kSpurious, i, 10));
  }
  if (init.points.empty()) init.points.push_back(Eigen::Vector3d::Zero());
  while (init.colours.size() < init.points.size())
    init.colours.emplace_back(0.5, 0.5, 0.5);

  fx.scene.gaussians =
      gaussians_from_points(init, Eigen::Vector3d(0.5, 0.5, 0.5),
                            spec.sh_degree);

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-1e300);
  for (const auto& p : init.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector3d margin =
      ((hi - lo).cwiseMax(1e-3) * 0.1).cwiseMax(1e-3);
  fx.scene.metadata.box_min = lo - margin;
  fx.scene.metadata.box_max = hi + margin;
  fx.scene.metadata.name = "fixture-" + std::to_string(spec.seed);
  fx.scene.validate();
  return fx;
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const GaussianSet& g = fixture.scene.gaussians;
  std::vector<Eigen::Vector3d> points, colours;
  for (std::size_t i = 0; i < g.count(); ++i) {
    points.emplace_back(g.position(i));
    colours.emplace_back(g.colour(i)[0], g.colour(i)[1], g.colour(i)[2]);
  }
  write_ply_points(dir / "points.ply", points, colours,
                   PlyFormat::kBinaryLittleEndian);

  nlohmann::json cfg;
  cfg["name"] = fixture.scene.metadata.name;
  cfg["points_path"] = "points.ply";
  cfg["sh_degree"] = g.sh_degree;
  cfg["bounding_box"] = {
      {"min",
       {fixture.scene.metadata.box_min[0], fixture.scene.metadata.box_min[1],
        fixture.scene.metadata.box_min[2]}},
      {"max",
       {fixture.scene.metadata.box_max[0], fixture.scene.metadata.box_max[1],
        fixture.scene.metadata.box_max[2]}}};
  cfg["views"] = nlohmann::json::array();

  int idx = 0;
  for (int split = 0; split < 2; ++split) {
    const auto& views =
        split ? fixture.scene.test_views : fixture.scene.train_views;
    for (const View& v : views) {
      char name[32];
      std::snprintf(name, sizeof(name), "view_%02d.png", idx++);
      save_png(v.image, dir / name);
      nlohmann::json jv;
      jv["image"] = name;
      jv["split"] = split ? "test" : "train";
      nlohmann::json cam;
      cam["fx"] = v.camera.fx;
      cam["fy"] = v.camera.fy;
      cam["cx"] = v.camera.cx;
      cam["cy"] = v.camera.cy;
      cam["width"] = v.camera.width;
      cam["height"] = v.camera.height;
      cam["near_clip"] = v.camera.near_clip;
      nlohmann::json m = nlohmann::json::array();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m.push_back(v.camera.world_to_camera(r, c));
      cam["world_to_camera"] = m;
      jv["camera"] = cam;
      cfg["views"].push_back(jv);
    }
  }
  std::ofstream out(dir / "scene.json");
  out << cfg.dump(2) << "\n";
  if (!out)
    throw Error(ErrorCode::kIo, "cannot write " + (dir / "scene.json").string());
}

}  // namespace ugs
