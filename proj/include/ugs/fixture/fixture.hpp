#pragma once

#include <filesystem>

#include "ugs/core/scene.hpp"

namespace ugs {

/// Synthetic desk-scale scene: random Gaussians rendered to ground-truth
/// views by the brute-force reference renderer. The scene's GaussianSet is
/// the *initialization* (point-cloud ingest of a possibly degraded copy of
/// the truth), which is what a training run starts from.
struct FixtureSpec {
  int n_gaussians = 20;
  int n_train_views = 8;
  int n_test_views = 2;
  int image_size = 32;
  std::uint64_t seed = 1;
  int sh_degree = 0;
  double opacity_lo = 0.35;  // ground-truth opacity range
  double opacity_hi = 0.75;

  /// Azimuth span of the train cameras. A full circle (the default)
  /// interleaves the test cameras between train ones; anything smaller
  /// clusters the train views on an arc and pushes the test views beyond
  /// its end by `test_spread` each - the sparse-view ambiguity regime.
  double train_arc = 2.0 * 3.14159265358979323846;
  double test_spread = 0.35;  // radians past the arc per test view

  // Degradations applied to the initialization points (sparse-init study).
  double init_position_noise = 0.0;  // stddev, world units
  double dropped_fraction = 0.0;     // fraction of true points omitted
  double spurious_fraction = 0.0;    // extra random points, fraction of n
};

struct Fixture {
  Scene scene;        // initialization Gaussians + ground-truth views
  GaussianSet truth;  // generating parameters
};

Fixture make_fixture(const FixtureSpec& spec);

/// Named parameter sets shared by the CLI and the acceptance suite:
///   basic       - 3 Gaussians, 3 train / 1 test views
///   convergence - 20 Gaussians, 8 train / 2 test views
///   overfit     - sparse-init study: degraded init, 5 train / 3 test views
FixtureSpec fixture_preset(const std::string& name, std::uint64_t seed);

/// Writes points.ply, view_##.png and scene.json under `dir` so the same
/// fixture can be consumed through the file-based pipeline.
void write_fixture(const Fixture& fixture,
                   const std::filesystem::path& dir);

}  // namespace ugs
