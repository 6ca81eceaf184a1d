// Exercises the installed command-line surface end to end. The binary path
// arrives via the UGS_BIN environment variable (set by CTest).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "test_support.hpp"
#include "ugs/core/image.hpp"
#include "ugs/fixture/fixture.hpp"
#include "ugs/raster/reference_renderer.hpp"
#include "ugs/softdrop/softdrop.hpp"
#include "ugs/train/checkpoint.hpp"

using namespace ugs;
namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* bin = std::getenv("UGS_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "UGS_BIN must point at the ugs binary");
  return bin;
}

struct CommandResult {
  int exit_code = 0;
  std::string stderr_text;
};

CommandResult run_cli(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "ugs_cli_stderr.txt";
  const std::string cmd = binary() + " " + args + " 2>" + err.string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stderr_text = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "ugs_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("init: deterministic checkpoint bytes; missing files fail cleanly") {
  const auto dir = temp_dir("init");
  REQUIRE(run_cli("fixture --preset basic --seed 5 --out " +
                  (dir / "fx").string())
              .exit_code == 0);

  const auto cfg = (dir / "fx" / "scene.json").string();
  REQUIRE(run_cli("init --config " + cfg + " --seed 9 --out " +
                  (dir / "a.ugs").string())
              .exit_code == 0);
  REQUIRE(run_cli("init --config " + cfg + " --seed 9 --out " +
                  (dir / "b.ugs").string())
              .exit_code == 0);
  CHECK(slurp(dir / "a.ugs") == slurp(dir / "b.ugs"));

  // Checkpoint 0 reloads.
  const Session s = load_checkpoint(dir / "a.ugs");
  CHECK(s.scene.gaussians.count() == 3);

  // Missing PLY: nonzero exit, coded error naming the path.
  {
    std::ifstream in(cfg);
    nlohmann::json j;
    in >> j;
    j["points_path"] = "missing.ply";
    std::ofstream out(dir / "broken.json");
    out << j.dump();
  }
  const CommandResult r =
      run_cli("init --config " + (dir / "broken.json").string() + " --out " +
              (dir / "c.ugs").string());
  CHECK(r.exit_code != 0);
  CHECK(r.stderr_text.find("error[E_") != std::string::npos);
  CHECK(r.stderr_text.find("missing.ply") != std::string::npos);
}

TEST_CASE("train: metric rows per iteration and seeded reproducibility") {
  const auto dir = temp_dir("train");
  REQUIRE(run_cli("fixture --preset basic --seed 6 --out " +
                  (dir / "fx").string())
              .exit_code == 0);
  REQUIRE(run_cli("init --config " + (dir / "fx" / "scene.json").string() +
                  " --seed 6 --out " + (dir / "ckpt0.ugs").string())
              .exit_code == 0);

  for (const char* run : {"run1", "run2"}) {
    REQUIRE(run_cli("train --checkpoint " + (dir / "ckpt0.ugs").string() +
                    " --out-dir " + (dir / run).string() +
                    " --iterations 10 --seed 7")
                .exit_code == 0);
  }
  const std::string csv = slurp(dir / "run1" / "metrics.csv");
  CHECK(csv == slurp(dir / "run2" / "metrics.csv"));
  // Header plus one row per iteration.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(fs::exists(dir / "run1" / "run_manifest.json"));
  CHECK(fs::exists(dir / "run1" / "checkpoint_final.ugs"));

  // The manifest is a config snapshot written before training.
  const std::string manifest = slurp(dir / "run1" / "run_manifest.json");
  CHECK(manifest.find("\"seed\": 7") != std::string::npos);
}

TEST_CASE("render: PNG plus raw dump matching the brute-force oracle") {
  const auto dir = temp_dir("render");
  REQUIRE(run_cli("fixture --preset basic --seed 8 --out " +
                  (dir / "fx").string())
              .exit_code == 0);
  REQUIRE(run_cli("init --config " + (dir / "fx" / "scene.json").string() +
                  " --seed 8 --out " + (dir / "ckpt.ugs").string())
              .exit_code == 0);

  REQUIRE(run_cli("render --checkpoint " + (dir / "ckpt.ugs").string() +
                  " --view-index 0 --eval-mode off --out " +
                  (dir / "img.png").string() + " --raw " +
                  (dir / "img.f32").string())
              .exit_code == 0);
  REQUIRE(fs::exists(dir / "img.png"));

  // Golden: the reference renderer on the same checkpoint state.
  const Session s = load_checkpoint(dir / "ckpt.ugs");
  const ImageBuffer raw = load_raw_f32(dir / "img.f32");
  const ReferenceRender golden = reference_render(
      s.scene.gaussians, s.scene.train_views[0].camera,
      test::raw_opacities(s.scene.gaussians), {});
  REQUIRE(raw.pixels.size() == golden.raw.size());
  for (std::size_t i = 0; i < raw.pixels.size(); ++i)
    CHECK(std::fabs(raw.pixels[i] - golden.raw[i]) < 1e-6);

  // Evaluation modes differ once u is away from its limits (u = 0.5 here).
  REQUIRE(run_cli("render --checkpoint " + (dir / "ckpt.ugs").string() +
                  " --view-index 0 --eval-mode deterministic_q_half --out " +
                  (dir / "img_mech.png").string() + " --raw " +
                  (dir / "img_mech.f32").string())
              .exit_code == 0);
  const ImageBuffer mech = load_raw_f32(dir / "img_mech.f32");
  double diff = 0.0;
  for (std::size_t i = 0; i < raw.pixels.size(); ++i)
    diff = std::max(diff, std::fabs(raw.pixels[i] - mech.pixels[i]));
  CHECK(diff > 1e-4);

  // Bad camera spec.
  CHECK(run_cli("render --checkpoint " + (dir / "ckpt.ugs").string() +
                " --view-index 99 --out " + (dir / "x.png").string())
            .exit_code != 0);
}

TEST_CASE("eval: perfect reconstruction scores PSNR 100 / SSIM 1") {
  const auto dir = temp_dir("eval");
  // Build a session whose Gaussians exactly generate its views.
  Fixture fx = make_fixture(fixture_preset("convergence", 12));
  Scene scene;
  scene.metadata = fx.scene.metadata;
  scene.gaussians = fx.truth;
  // Views rendered from the truth by the oracle (float64, no PNG round trip).
  scene.train_views = fx.scene.train_views;
  scene.test_views = fx.scene.test_views;
  TrainConfig cfg;
  cfg.enable_uncertainty = false;
  Session session = make_session(std::move(scene), {}, {}, cfg);
  save_checkpoint(session, dir / "perfect.ugs");

  REQUIRE(run_cli("eval --checkpoint " + (dir / "perfect.ugs").string() +
                  " --split test --out " + (dir / "report.csv").string())
              .exit_code == 0);
  const std::string report = slurp(dir / "report.csv");
  CHECK(report.find("view,psnr,ssim\n") == 0);
  // Engine vs oracle rendering agree to ~1e-12: capped PSNR, SSIM ~ 1.
  const std::size_t mean_at = report.find("mean,");
  REQUIRE(mean_at != std::string::npos);
  double mean_psnr = 0, mean_ssim = 0;
  REQUIRE(std::sscanf(report.c_str() + mean_at, "mean,%lf,%lf", &mean_psnr,
                      &mean_ssim) == 2);
  CHECK(mean_psnr == 100.0);
  CHECK(mean_ssim >= 0.9999);

  CHECK(run_cli("eval --checkpoint " + (dir / "perfect.ugs").string() +
                " --split nope --out x.csv")
            .exit_code != 0);
}

TEST_CASE("uncertainty-stats: histogram summary and drop-weight curves") {
  const auto dir = temp_dir("stats");
  REQUIRE(run_cli("fixture --preset basic --seed 15 --out " +
                  (dir / "fx").string())
              .exit_code == 0);
  REQUIRE(run_cli("init --config " + (dir / "fx" / "scene.json").string() +
                  " --seed 15 --out " + (dir / "ckpt.ugs").string())
              .exit_code == 0);
  REQUIRE(run_cli("uncertainty-stats --checkpoint " +
                  (dir / "ckpt.ugs").string() + " --view-index 0 --out " +
                  (dir / "hist.csv").string() + " --curve " +
                  (dir / "curve.csv").string() + " --mc-samples 20000")
              .exit_code == 0);

  // Fresh net: all u = 0.5 -> ambiguous fraction 1.
  const std::string hist = slurp(dir / "hist.csv");
  CHECK(hist.find("ambiguous=1") != std::string::npos);

  // Parse the curve and verify the q = 1/2 slice and the MC mean.
  std::ifstream in(dir / "curve.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "u,omega_q_half,omega_mc_mean");
  bool saw_symmetry_point = false;
  int clamped_rows = 0, total_rows = 0;
  const CounterRng rng(99991);
  while (std::getline(in, line)) {
    double u, half, mc;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &u, &half, &mc) == 3);
    ++total_rows;
    if (u == 0.5) {
      saw_symmetry_point = true;
      CHECK(half == 0.5);
    }
    CHECK(half >= 0.2);
    CHECK(half <= 0.8);
    if (u < 0.46 || u > 0.54) {
      CHECK((half == 0.2 || half == 0.8));
      ++clamped_rows;
    }
    // Large-sample oracle at three points.
    if (u == 0.3 || u == 0.5 || u == 0.7) {
      double oracle = 0.0;
      const int n = 1000000;
      SoftDropConfig sd;
      for (int i = 0; i < n; ++i)
        oracle += clamp_weight(
            soft_drop_weight(u, rng.uniform_open(1, i), 0.1), sd);
      oracle /= n;
      CHECK(std::fabs(mc - oracle) < 0.01);
    }
  }
  CHECK(saw_symmetry_point);
  CHECK(total_rows == 199);
  CHECK(clamped_rows > 150);
}
