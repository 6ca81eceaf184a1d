// Command-line front end: init, train, render, eval, uncertainty-stats,
// plus the synthetic-fixture generator used as the desk-scale dataset.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ugs/core/error.hpp"
#include "ugs/fixture/fixture.hpp"
#include "ugs/kernels/kernels.hpp"
#include "ugs/metrics/metrics.hpp"
#include "ugs/softdrop/softdrop.hpp"
#include "ugs/train/checkpoint.hpp"
#include "ugs/train/trainer.hpp"

#ifndef UGS_BUILD_ID
#define UGS_BUILD_ID "dev"
#endif

namespace {

using namespace ugs;

std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("UGS_OUT_ROOT")) return std::filesystem::path(root) / p;
  return p;
}

EvalMode parse_eval_mode(const std::string& s) {
  if (s == "stochastic") return EvalMode::kStochastic;
  if (s == "deterministic_q_half") return EvalMode::kDeterministicQHalf;
  if (s == "off") return EvalMode::kOff;
  throw Error(ErrorCode::kConfig, "unknown eval mode '" + s + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
}

nlohmann::json config_snapshot(const Session& s) {
  nlohmann::json j;
  const TrainConfig& c = s.config;
  j["iterations"] = c.iterations;
  j["lambda_dssim"] = c.lambda_dssim;
  j["freeze_epsilon"] = c.freeze_epsilon;
  j["freeze_check_interval"] = c.freeze_check_interval;
  j["lr"] = {{"position", c.lr_position},
             {"position_final", c.lr_position_final},
             {"rotation", c.lr_rotation},
             {"log_scale", c.lr_log_scale},
             {"opacity", c.lr_opacity},
             {"colour", c.lr_colour},
             {"mlp", c.lr_mlp},
             {"tables", c.lr_tables}};
  j["prune"] = {{"threshold", c.prune_opacity_threshold},
                {"interval", c.prune_interval},
                {"disable_last_fraction", c.prune_disable_last_fraction}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["enable_uncertainty"] = c.enable_uncertainty;
  j["enable_modulation"] = c.enable_modulation;
  j["enable_dropout"] = c.enable_dropout;
  j["softdrop"] = {{"temperature", s.softdrop.temperature},
                   {"clamp_min", s.softdrop.clamp_min},
                   {"clamp_max", s.softdrop.clamp_max}};
  j["encoding"] = {{"position_levels", s.encoding_config.position_levels},
                   {"scale_levels", s.encoding_config.scale_levels},
                   {"rotation_levels", s.encoding_config.rotation_levels},
                   {"view_levels", s.encoding_config.view_levels}};
  j["n_gaussians"] = s.scene.gaussians.count();
  j["scene"] = s.scene.metadata.name;
  return j;
}

const Camera& pick_camera(const Session& s, int view_index,
                          const std::string& split) {
  const auto& views =
      split == "test" ? s.scene.test_views : s.scene.train_views;
  if (views.empty())
    throw Error(ErrorCode::kEmptyScene, "split '" + split + "' has no views");
  if (view_index < 0 || view_index >= static_cast<int>(views.size()))
    throw Error(ErrorCode::kConfig,
                "view index " + std::to_string(view_index) +
                    " out of range for split '" + split + "' (" +
                    std::to_string(views.size()) + " views)");
  return views[view_index].camera;
}

int run(int argc, char** argv) {
  CLI::App app{"uncertainty-guided Gaussian splatting engine"};
  app.require_subcommand(1);

  // ---- init ----------------------------------------------------------
  auto* init = app.add_subcommand("init", "ingest a scene and write checkpoint 0");
  std::string init_config, init_out = "checkpoint_0.ugs";
  std::uint64_t init_seed = 1;
  int enc_p = 6, enc_s = 0, enc_r = 0, enc_v = 0;
  init->add_option("--config", init_config, "scene config JSON")->required();
  init->add_option("--out", init_out, "output checkpoint path");
  init->add_option("--seed", init_seed, "seed for parameter initialisation");
  init->add_option("--levels-position", enc_p, "hash-grid levels for positions");
  init->add_option("--levels-scale", enc_s, "hash-grid levels for scales");
  init->add_option("--levels-rotation", enc_r, "hash-grid levels for rotations");
  init->add_option("--levels-view", enc_v, "hash-grid levels for view dirs");

  // ---- train ---------------------------------------------------------
  auto* train = app.add_subcommand("train", "optimise from a checkpoint");
  std::string train_ckpt, train_out_dir = "run";
  int t_iterations = -1, t_freeze_interval = -1, t_prune_interval = -1;
  int t_threads = -1, t_checkpoint_interval = 0;
  double t_lambda = -1, t_epsilon = -1, t_prune_threshold = -1, t_tau = -1;
  double t_clamp_min = -1, t_clamp_max = -1;
  std::uint64_t t_seed = 0;
  bool t_seed_set = false, no_uncertainty = false, no_dropout = false,
       no_modulation = false;
  std::vector<std::pair<std::string, double>> lr_overrides;
  double lr_position = -1, lr_rotation = -1, lr_log_scale = -1,
         lr_opacity = -1, lr_colour = -1, lr_mlp = -1, lr_tables = -1;
  train->add_option("--checkpoint", train_ckpt, "input checkpoint")->required();
  train->add_option("--out-dir", train_out_dir, "output directory");
  train->add_option("--iterations", t_iterations, "total iterations to reach");
  train->add_option("--lambda", t_lambda, "D-SSIM weight");
  train->add_option("--epsilon", t_epsilon, "freeze threshold (dB)");
  train->add_option("--freeze-interval", t_freeze_interval,
                    "iterations between plateau checks");
  train->add_option("--prune-threshold", t_prune_threshold, "opacity prune threshold");
  train->add_option("--prune-interval", t_prune_interval, "iterations between prunes");
  train->add_option("--tau", t_tau, "soft dropout temperature");
  train->add_option("--clamp-min", t_clamp_min, "dropout clamp lower bound");
  train->add_option("--clamp-max", t_clamp_max, "dropout clamp upper bound");
  train->add_flag("--no-uncertainty", no_uncertainty,
                  "disable the whole uncertainty mechanism (effective = alpha)");
  train->add_flag("--no-dropout", no_dropout, "disable the soft dropout factor");
  train->add_flag("--no-modulation", no_modulation, "disable opacity modulation");
  train->add_option("--threads", t_threads, "tile worker cap");
  train->add_option("--checkpoint-interval", t_checkpoint_interval,
                    "write intermediate checkpoints every N iterations");
  auto* seed_opt = train->add_option("--seed", t_seed, "training seed override");
  train->add_option("--lr-position", lr_position, "");
  train->add_option("--lr-rotation", lr_rotation, "");
  train->add_option("--lr-log-scale", lr_log_scale, "");
  train->add_option("--lr-opacity", lr_opacity, "");
  train->add_option("--lr-colour", lr_colour, "");
  train->add_option("--lr-mlp", lr_mlp, "");
  train->add_option("--lr-tables", lr_tables, "");

  // ---- render --------------------------------------------------------
  auto* render_cmd = app.add_subcommand("render", "render a view to PNG");
  std::string render_ckpt, render_out = "render.png", render_raw,
              render_split = "train", render_mode;
  int render_view = 0;
  render_cmd->add_option("--checkpoint", render_ckpt)->required();
  render_cmd->add_option("--view-index", render_view, "view index in the split");
  render_cmd->add_option("--split", render_split, "train|test");
  render_cmd->add_option("--out", render_out, "output PNG");
  render_cmd->add_option("--raw", render_raw, "also dump fp32 raw image");
  render_cmd->add_option("--eval-mode", render_mode,
                         "stochastic|deterministic_q_half|off");

  // ---- eval ----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM over a split");
  std::string eval_ckpt, eval_split = "test", eval_out = "report.csv";
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--split", eval_split, "train|test");
  eval_cmd->add_option("--out", eval_out, "output CSV");

  // ---- uncertainty-stats ----------------------------------------------
  auto* stats_cmd =
      app.add_subcommand("uncertainty-stats", "u histogram and drop-weight curve");
  std::string stats_ckpt, stats_split = "train", stats_out = "histogram.csv",
              stats_curve;
  int stats_view = 0, stats_mc = 2000;
  stats_cmd->add_option("--checkpoint", stats_ckpt)->required();
  stats_cmd->add_option("--view-index", stats_view);
  stats_cmd->add_option("--split", stats_split, "train|test");
  stats_cmd->add_option("--out", stats_out, "histogram CSV");
  stats_cmd->add_option("--curve", stats_curve, "drop-weight curve CSV");
  stats_cmd->add_option("--mc-samples", stats_mc,
                        "Monte-Carlo draws per point for the mean curve");

  // ---- fixture ---------------------------------------------------------
  auto* fx_cmd = app.add_subcommand("fixture", "generate a synthetic scene");
  std::string fx_out = "fixture", fx_preset = "basic";
  std::uint64_t fx_seed = 1;
  int fx_n = -1, fx_train = -1, fx_test = -1, fx_size = -1;
  double fx_noise = -1, fx_dropped = -1, fx_spurious = -1;
  fx_cmd->add_option("--out", fx_out, "output directory");
  fx_cmd->add_option("--preset", fx_preset, "basic|convergence|overfit");
  fx_cmd->add_option("--seed", fx_seed);
  fx_cmd->add_option("--gaussians", fx_n);
  fx_cmd->add_option("--train-views", fx_train);
  fx_cmd->add_option("--test-views", fx_test);
  fx_cmd->add_option("--image-size", fx_size);
  fx_cmd->add_option("--noise", fx_noise, "init position noise stddev");
  fx_cmd->add_option("--dropped", fx_dropped, "fraction of true points dropped");
  fx_cmd->add_option("--spurious", fx_spurious, "spurious point fraction");
  double fx_op_lo = -1, fx_op_hi = -1, fx_arc = -1, fx_spread = -1;
  fx_cmd->add_option("--opacity-lo", fx_op_lo, "ground-truth opacity lower bound");
  fx_cmd->add_option("--opacity-hi", fx_op_hi, "ground-truth opacity upper bound");
  fx_cmd->add_option("--train-arc", fx_arc, "train camera azimuth span (radians)");
  fx_cmd->add_option("--test-spread", fx_spread,
                     "per-view azimuth step of test cameras past the arc");

  CLI11_PARSE(app, argc, argv);

  if (*init) {
    Scene scene = load_scene(init_config);
    EncodingConfig enc;
    enc.position_levels = enc_p;
    enc.scale_levels = enc_s;
    enc.rotation_levels = enc_r;
    enc.view_levels = enc_v;
    SoftDropConfig sd;
    TrainConfig tc;
    tc.seed = init_seed;
    Session session = make_session(std::move(scene), enc, sd, tc);
    const auto out = resolve_output(init_out);
    save_checkpoint(session, out);
    std::printf("wrote %s (%zu gaussians, %zu train / %zu test views)\n",
                out.string().c_str(), session.scene.gaussians.count(),
                session.scene.train_views.size(),
                session.scene.test_views.size());
    return 0;
  }

  if (*train) {
    Session session = load_checkpoint(train_ckpt);
    TrainConfig& c = session.config;
    if (t_iterations >= 0) c.iterations = t_iterations;
    if (t_lambda >= 0) c.lambda_dssim = t_lambda;
    if (t_epsilon >= 0) c.freeze_epsilon = t_epsilon;
    if (t_freeze_interval >= 0) c.freeze_check_interval = t_freeze_interval;
    if (t_prune_threshold >= 0) c.prune_opacity_threshold = t_prune_threshold;
    if (t_prune_interval >= 0) c.prune_interval = t_prune_interval;
    if (t_threads >= 0) c.threads = t_threads;
    if (!seed_opt->empty()) {
      c.seed = t_seed;
      (void)t_seed_set;
    }
    if (lr_position >= 0) c.lr_position = lr_position;
    if (lr_rotation >= 0) c.lr_rotation = lr_rotation;
    if (lr_log_scale >= 0) c.lr_log_scale = lr_log_scale;
    if (lr_opacity >= 0) c.lr_opacity = lr_opacity;
    if (lr_colour >= 0) c.lr_colour = lr_colour;
    if (lr_mlp >= 0) c.lr_mlp = lr_mlp;
    if (lr_tables >= 0) c.lr_tables = lr_tables;
    if (no_uncertainty) c.enable_uncertainty = false;
    if (no_dropout) c.enable_dropout = false;
    if (no_modulation) c.enable_modulation = false;
    if (t_tau >= 0) session.softdrop.temperature = t_tau;
    if (t_clamp_min >= 0) session.softdrop.clamp_min = t_clamp_min;
    if (t_clamp_max >= 0) session.softdrop.clamp_max = t_clamp_max;

    const auto out_dir = resolve_output(train_out_dir);
    std::filesystem::create_directories(out_dir);

    nlohmann::json manifest;
    manifest["build"] = UGS_BUILD_ID;
    manifest["kernels"] =
        std::string(kernels::backend_name(kernels::active_backend()));
    manifest["config"] = config_snapshot(session);
    manifest["outputs"] = {{"metrics", "metrics.csv"},
                           {"final_checkpoint", "checkpoint_final.ugs"}};
    write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

    Trainer trainer(std::move(session));
    while (trainer.session().state.iteration <
           trainer.session().config.iterations) {
      trainer.step();
      const int it = trainer.session().state.iteration;
      if (t_checkpoint_interval > 0 && it % t_checkpoint_interval == 0 &&
          it < trainer.session().config.iterations) {
        save_checkpoint(trainer.session(),
                        out_dir / ("checkpoint_" + std::to_string(it) + ".ugs"));
      }
    }
    save_checkpoint(trainer.session(), out_dir / "checkpoint_final.ugs");
    write_text(out_dir / "metrics.csv",
               metric_log_to_csv(trainer.session().state.metric_log));
    const auto& log = trainer.session().state.metric_log;
    std::printf("trained to iteration %d (%zu gaussians)%s\n",
                trainer.session().state.iteration,
                trainer.session().scene.gaussians.count(),
                !log.empty() && log.back().frozen ? ", uncertainty net frozen"
                                                  : "");
    return 0;
  }

  if (*render_cmd) {
    Session session = load_checkpoint(render_ckpt);
    if (!render_mode.empty())
      session.softdrop.eval_mode = parse_eval_mode(render_mode);
    const EvalMode mode = session.softdrop.eval_mode;
    Trainer trainer(std::move(session));
    const Camera& cam =
        pick_camera(trainer.session(), render_view, render_split);
    const RenderOutput ro = trainer.render_view(cam, mode);
    save_png(ro.image, resolve_output(render_out));
    if (!render_raw.empty()) {
      // The fp32 dump keeps the pre-clip blend values.
      ImageBuffer raw_img(cam.width, cam.height);
      raw_img.pixels.assign(ro.raw.begin(), ro.raw.end());
      save_raw_f32(raw_img, resolve_output(render_raw));
    }
    return 0;
  }

  if (*eval_cmd) {
    if (eval_split != "train" && eval_split != "test")
      throw Error(ErrorCode::kConfig, "split must be 'train' or 'test'");
    Trainer trainer(load_checkpoint(eval_ckpt));
    const MetricReport report = trainer.eval_report(eval_split == "test");
    write_text(resolve_output(eval_out), report.to_csv());
    std::printf("%s: mean PSNR %.4f dB, mean SSIM %.6f over %zu views\n",
                eval_split.c_str(), report.mean_psnr, report.mean_ssim,
                report.per_view.size());
    return 0;
  }

  if (*stats_cmd) {
    Trainer trainer(load_checkpoint(stats_ckpt));
    const Camera& cam =
        pick_camera(trainer.session(), stats_view, stats_split);
    const UncertaintyHistogram hist = trainer.uncertainty_histogram(cam);
    std::string csv = hist.to_csv();
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "# total=%zu mean=%.17g median=%.17g ambiguous=%.17g\n",
                  hist.total, hist.mean, hist.median, hist.ambiguous_fraction);
    write_text(resolve_output(stats_out), buf + csv);

    if (!stats_curve.empty()) {
      const SoftDropConfig& sd = trainer.session().softdrop;
      const CounterRng rng(trainer.session().config.seed);
      std::string curve = "u,omega_q_half,omega_mc_mean\n";
      for (int k = 1; k < 200; ++k) {
        const double u = k / 200.0;
        const double half =
            clamp_weight(soft_drop_weight(u, 0.5, sd.temperature), sd);
        double mc = 0.0;
        for (int m = 0; m < stats_mc; ++m)
          mc += clamp_weight(
              soft_drop_weight(u, rng.uniform_open(0xC0FFEE, k, m),
                               sd.temperature),
              sd);
        mc /= stats_mc;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", u, half, mc);
        curve += buf;
      }
      write_text(resolve_output(stats_curve), curve);
    }
    return 0;
  }

  if (*fx_cmd) {
    FixtureSpec spec = fixture_preset(fx_preset, fx_seed);
    if (fx_n > 0) spec.n_gaussians = fx_n;
    if (fx_train > 0) spec.n_train_views = fx_train;
    if (fx_test >= 0) spec.n_test_views = fx_test;
    if (fx_size > 0) spec.image_size = fx_size;
    if (fx_noise >= 0) spec.init_position_noise = fx_noise;
    if (fx_dropped >= 0) spec.dropped_fraction = fx_dropped;
    if (fx_spurious >= 0) spec.spurious_fraction = fx_spurious;
    if (fx_op_lo >= 0) spec.opacity_lo = fx_op_lo;
    if (fx_op_hi >= 0) spec.opacity_hi = fx_op_hi;
    if (fx_arc >= 0) spec.train_arc = fx_arc;
    if (fx_spread >= 0) spec.test_spread = fx_spread;
    const Fixture fx = make_fixture(spec);
    write_fixture(fx, resolve_output(fx_out));
    std::printf("fixture '%s': %zu init gaussians, %zu train / %zu test views\n",
                fx_preset.c_str(), fx.scene.gaussians.count(),
                fx.scene.train_views.size(), fx.scene.test_views.size());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ugs::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", ugs::error_code_name(e.code()),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[E_UNKNOWN]: %s\n", e.what());
    return 1;
  }
}
