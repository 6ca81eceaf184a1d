#include "ugs/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"
#include "ugs/train/loss.hpp"

namespace ugs {

namespace {
constexpr std::uint64_t kViewSelectStream = 0x56494557u;

double safe_opacity(double logit_value) {
  return std::clamp(sigmoid(logit_value), 1e-300, std::nextafter(1.0, 0.0));
}

// Forward of the modulation/dropout chain honouring the ablation switches.
SoftDropChain chain_forward(double alpha, double u, double q,
                            const SoftDropConfig& sd, bool modulation,
                            bool dropout) {
  if (modulation && dropout) return soft_drop_forward(alpha, u, q, sd);
  SoftDropChain c;
  c.alpha = alpha;
  c.u = u;
  c.q = q;
  c.alpha_mod = modulation ? modulate_opacity(alpha, u) : alpha;
  c.omega = dropout ? soft_drop_weight(u, q, sd.temperature) : 1.0;
  c.omega_clamped = dropout ? clamp_weight(c.omega, sd) : 1.0;
  c.effective = effective_opacity(c.alpha_mod, c.omega_clamped);
  return c;
}

SoftDropGrads chain_backward(const SoftDropChain& c, const SoftDropConfig& sd,
                             double upstream, bool modulation, bool dropout) {
  if (modulation && dropout) return soft_drop_backward(c, sd, upstream);
  SoftDropGrads g;
  const double d_alpha_mod = upstream * c.omega_clamped;
  const double d_omega_clamped = upstream * c.alpha_mod;
  if (modulation) {
    g.d_alpha = d_alpha_mod * (1.0 - c.u);
    g.d_u = -d_alpha_mod * c.alpha;
  } else {
    g.d_alpha = d_alpha_mod;
    g.d_u = 0.0;
  }
  if (dropout) {
    const bool inside_band = c.omega > sd.clamp_min && c.omega < sd.clamp_max;
    const bool inside_guard = c.u > kLogitGuard && c.u < 1.0 - kLogitGuard;
    if (inside_band && inside_guard) {
      const double d_omega_ds = -c.omega * (1.0 - c.omega);
      const double ds_du = 1.0 / (sd.temperature * c.u * (1.0 - c.u));
      g.d_u += d_omega_clamped * d_omega_ds * ds_du;
    }
  }
  return g;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) throw Error(ErrorCode::kConfig, "iterations must be >= 0");
  if (!(lambda_dssim >= 0.0 && lambda_dssim <= 1.0))
    throw Error(ErrorCode::kConfig, "lambda must lie in [0,1]");
  if (!(freeze_epsilon > 0.0))
    throw Error(ErrorCode::kConfig, "freeze epsilon must be positive");
  for (double lr : {lr_position, lr_position_final, lr_rotation, lr_log_scale,
                    lr_opacity, lr_colour, lr_mlp, lr_tables})
    if (lr < 0.0) throw Error(ErrorCode::kConfig, "learning rates must be >= 0");
  if (!(prune_opacity_threshold >= 0.0 && prune_opacity_threshold < 1.0))
    throw Error(ErrorCode::kConfig, "prune threshold must lie in [0,1)");
}

std::string metric_log_to_csv(const std::vector<MetricRow>& rows) {
  std::string out =
      "iteration,loss,l1,dssim,train_psnr,test_psnr,n_gaussians,frozen\n";
  char buf[256];
  for (const MetricRow& r : rows) {
    char train_psnr[32] = "";
    char test_psnr[32] = "";
    if (std::isfinite(r.train_psnr))
      std::snprintf(train_psnr, sizeof(train_psnr), "%.17g", r.train_psnr);
    if (std::isfinite(r.test_psnr))
      std::snprintf(test_psnr, sizeof(test_psnr), "%.17g", r.test_psnr);
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%s,%s,%zu,%d\n",
                  r.iteration, r.loss, r.l1, r.dssim, train_psnr, test_psnr,
                  r.n_gaussians, r.frozen ? 1 : 0);
    out += buf;
  }
  return out;
}

Session make_session(Scene scene, const EncodingConfig& encoding,
                     const SoftDropConfig& softdrop,
                     const TrainConfig& config) {
  config.validate();
  softdrop.validate();
  scene.validate();

  Session s;
  s.scene = std::move(scene);
  s.encoding_config = encoding;
  s.softdrop = softdrop;
  s.config = config;

  const Eigen::Vector3d lo = s.scene.metadata.box_min;
  const Eigen::Vector3d hi = s.scene.metadata.box_max;
  s.encoder =
      std::make_unique<InputEncoder>(encoding, lo, hi, (hi - lo).maxCoeff());
  s.encoder->randomize_tables(mix64(config.seed + 11));

  s.net = std::make_unique<UncertaintyNet>(
      UncertaintyNet::make_default(s.encoder->output_dim()));
  s.net->initialize(mix64(config.seed + 23));

  const std::size_t n = s.scene.gaussians.count();
  s.state.adam_positions = AdamState(3 * n);
  s.state.adam_rotations = AdamState(4 * n);
  s.state.adam_log_scales = AdamState(3 * n);
  s.state.adam_opacities = AdamState(n);
  s.state.adam_colours =
      AdamState(static_cast<std::size_t>(s.scene.gaussians.colour_dim()) * n);
  s.state.adam_mlp = AdamState(s.net->parameter_count());
  for (const HashGridEncoder* grid : s.encoder->grids())
    s.state.adam_tables.emplace_back(grid ? grid->parameter_count() : 0);
  return s;
}

void freeze(UncertaintyNet& net) { net.freeze(); }

// ---------------------------------------------------------------------------

Trainer::Trainer(Session session)
    : session_(std::move(session)), rng_(session_.config.seed) {
  session_.config.validate();
  session_.softdrop.validate();
  if (!session_.encoder || !session_.net)
    throw Error(ErrorCode::kContract, "session lacks encoder or net");
}

std::vector<std::size_t> Trainer::visible_indices(const Camera& camera) const {
  const GaussianSet& g = session_.scene.gaussians;
  std::vector<std::size_t> visible;
  ProjectedGaussian scratch;
  for (std::size_t i = 0; i < g.count(); ++i) {
    if (project_gaussian(g.position(i), g.rotation(i), g.log_scale(i),
                         g.colour(i), g.sh_degree, 0.5, camera, {},
                         &scratch) == ProjectionOutcome::kVisible)
      visible.push_back(i);
  }
  return visible;
}

std::vector<double> Trainer::effective_opacities(const Camera& camera,
                                                 EvalMode mode,
                                                 std::uint64_t iteration) const {
  const GaussianSet& g = session_.scene.gaussians;
  std::vector<double> eff(g.count());
  for (std::size_t i = 0; i < g.count(); ++i)
    eff[i] = safe_opacity(g.opacity_logits[i]);
  if (!session_.config.enable_uncertainty || mode == EvalMode::kOff)
    return eff;

  const std::vector<std::size_t> visible = visible_indices(camera);
  std::vector<double> row(session_.encoder->output_dim());
  for (std::size_t i : visible) {
    const Eigen::Vector4d q = g.rotation(i);
    const Eigen::Vector4d qn = q / q.norm();
    const Eigen::Vector3d s = g.log_scale(i).array().exp();
    const Eigen::Vector3d v = view_direction(camera, g.position(i));
    session_.encoder->assemble(g.position(i), v, qn, s, row);
    const double u = session_.net->predict_one(row, nullptr);
    const double q_draw =
        mode == EvalMode::kStochastic ? sample_q(rng_, iteration, i) : 0.5;
    eff[i] = chain_forward(eff[i], u, q_draw, session_.softdrop,
                           session_.config.enable_modulation,
                           session_.config.enable_dropout)
                 .effective;
  }
  return eff;
}

RenderOutput Trainer::render_view(const Camera& camera, EvalMode mode) const {
  RenderConfig rc;
  rc.background = session_.config.background;
  rc.threads = session_.config.threads;
  const std::vector<double> eff = effective_opacities(
      camera, mode, static_cast<std::uint64_t>(session_.state.iteration));
  return render(session_.scene.gaussians, camera, eff, rc);
}

double Trainer::eval_psnr(bool test_split) const {
  const auto& views =
      test_split ? session_.scene.test_views : session_.scene.train_views;
  if (views.empty())
    throw Error(ErrorCode::kEmptyScene, "split has no views to evaluate");
  double total = 0.0;
  for (const View& v : views) {
    const RenderOutput ro = render_view(v.camera, session_.softdrop.eval_mode);
    total += psnr(ro.image, v.image);
  }
  return total / static_cast<double>(views.size());
}

MetricReport Trainer::eval_report(bool test_split) const {
  const auto& views =
      test_split ? session_.scene.test_views : session_.scene.train_views;
  if (views.empty())
    throw Error(ErrorCode::kEmptyScene, "split has no views to evaluate");
  MetricReport report;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const RenderOutput ro =
        render_view(views[i].camera, session_.softdrop.eval_mode);
    ViewMetrics vm;
    vm.view_index = static_cast<int>(i);
    vm.psnr = psnr(ro.image, views[i].image);
    vm.ssim = views[i].image.width >= kSsimWindow &&
                      views[i].image.height >= kSsimWindow
                  ? ssim(ro.image, views[i].image)
                  : ssim_core(ro.image, views[i].image, nullptr);
    report.per_view.push_back(vm);
  }
  report.finalize();
  return report;
}

UncertaintyBatch Trainer::view_uncertainty(const Camera& camera,
                                           int view_id) const {
  const GaussianSet& g = session_.scene.gaussians;
  const std::vector<std::size_t> visible = visible_indices(camera);
  UncertaintyBatch batch;
  batch.view_id = view_id;
  std::vector<double> row(session_.encoder->output_dim());
  for (std::size_t i : visible) {
    const Eigen::Vector4d q = g.rotation(i);
    const Eigen::Vector4d qn = q / q.norm();
    const Eigen::Vector3d s = g.log_scale(i).array().exp();
    const Eigen::Vector3d v = view_direction(camera, g.position(i));
    session_.encoder->assemble(g.position(i), v, qn, s, row);
    batch.values.push_back(session_.net->predict_one(row, nullptr));
  }
  return batch;
}

UncertaintyHistogram Trainer::uncertainty_histogram(
    const Camera& camera) const {
  return make_uncertainty_histogram(view_uncertainty(camera, -1).values,
                                    session_.state.iteration);
}

double Trainer::position_lr() const {
  const TrainConfig& c = session_.config;
  if (c.iterations <= 0 || c.lr_position <= 0.0 || c.lr_position_final <= 0.0)
    return c.lr_position;
  const double t = std::min(
      1.0, static_cast<double>(session_.state.iteration) / c.iterations);
  return c.lr_position * std::pow(c.lr_position_final / c.lr_position, t);
}

TrainGradients Trainer::compute_gradients(std::size_t view_index) const {
  const Session& s = session_;
  const TrainConfig& cfg = s.config;
  const GaussianSet& g = s.scene.gaussians;
  if (view_index >= s.scene.train_views.size())
    throw Error(ErrorCode::kConfig, "train view index out of range");
  const View& view = s.scene.train_views[view_index];
  const std::uint64_t iter = static_cast<std::uint64_t>(s.state.iteration);
  const std::size_t n = g.count();

  // Forward: uncertainty pipeline (stochastic q) feeding the render.
  std::vector<double> eff(n);
  for (std::size_t i = 0; i < n; ++i)
    eff[i] = safe_opacity(g.opacity_logits[i]);

  std::vector<std::size_t> visible;
  std::vector<SoftDropChain> chains;
  std::vector<UncertaintyNet::Workspace> workspaces;
  std::vector<Eigen::Vector3d> view_dirs, scales;
  std::vector<Eigen::Vector4d> unit_quats;
  std::vector<double> quat_norms, dists;

  if (cfg.enable_uncertainty) {
    visible = visible_indices(view.camera);
    const std::size_t m = visible.size();
    chains.resize(m);
    workspaces.resize(m);
    view_dirs.resize(m);
    scales.resize(m);
    unit_quats.resize(m);
    quat_norms.resize(m);
    dists.resize(m);
    std::vector<double> row(s.encoder->output_dim());
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = visible[k];
      const Eigen::Vector4d q = g.rotation(i);
      quat_norms[k] = q.norm();
      unit_quats[k] = q / quat_norms[k];
      scales[k] = g.log_scale(i).array().exp();
      dists[k] = (g.position(i) - view.camera.centre()).norm();
      view_dirs[k] = view_direction(view.camera, g.position(i));
      s.encoder->assemble(g.position(i), view_dirs[k], unit_quats[k],
                          scales[k], row);
      const double u = s.net->predict_one(row, &workspaces[k]);
      const double q_draw = sample_q(rng_, iter, i);
      chains[k] = chain_forward(eff[i], u, q_draw, s.softdrop,
                                cfg.enable_modulation, cfg.enable_dropout);
      eff[i] = chains[k].effective;
    }
  }

  RenderConfig rc;
  rc.background = cfg.background;
  rc.transmittance_min = 0.0;  // exact backward
  rc.threads = cfg.threads;
  const RenderOutput ro = render(g, view.camera, eff, rc);
  const ColourLoss loss =
      colour_loss(ro.image, view.image, cfg.lambda_dssim, true);

  TrainGradients out;
  out.loss = loss.loss;
  out.l1 = loss.l1;
  out.dssim = loss.dssim;
  if (!std::isfinite(loss.loss)) return out;  // caller reports diagnostics

  const RenderGrads rg =
      render_backward(g, view.camera, ro, loss.d_rendered, rc);

  out.d_positions = rg.d_positions;
  out.d_rotations = rg.d_rotations;
  out.d_log_scales = rg.d_log_scales;
  out.d_colours = rg.d_colours;
  out.d_logits.assign(n, 0.0);
  out.d_mlp.assign(s.net->parameter_count(), 0.0);
  out.d_tables = s.encoder->zero_table_grads();

  if (cfg.enable_uncertainty) {
    std::vector<double> row_grad(s.encoder->output_dim());
    InputEncoder::SlotGrads slots;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const std::size_t i = visible[k];
      const double upstream = rg.d_effective_opacities[i];
      const SoftDropChain& chain = chains[k];
      const SoftDropGrads sd =
          chain_backward(chain, s.softdrop, upstream, cfg.enable_modulation,
                         cfg.enable_dropout);
      out.d_logits[i] += sd.d_alpha * sigmoid_derivative(chain.alpha);
      if (sd.d_u == 0.0) continue;

      s.net->backward_one(workspaces[k], sd.d_u, out.d_mlp, row_grad);
      slots = {};
      s.encoder->backward(g.position(i), view_dirs[k], unit_quats[k],
                          scales[k], row_grad, out.d_tables, slots);

      for (int c = 0; c < 3; ++c) out.d_positions[3 * i + c] += slots.position[c];
      const Eigen::Vector3d& v = view_dirs[k];
      const Eigen::Vector3d dv =
          (slots.view - v * v.dot(slots.view)) / dists[k];
      for (int c = 0; c < 3; ++c) out.d_positions[3 * i + c] += dv[c];
      const Eigen::Vector4d& qn = unit_quats[k];
      const Eigen::Vector4d dq =
          (slots.rotation - qn * qn.dot(slots.rotation)) / quat_norms[k];
      for (int c = 0; c < 4; ++c) out.d_rotations[4 * i + c] += dq[c];
      for (int c = 0; c < 3; ++c)
        out.d_log_scales[3 * i + c] += scales[k][c] * slots.scale[c];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out.d_logits[i] = rg.d_effective_opacities[i] *
                        sigmoid_derivative(safe_opacity(g.opacity_logits[i]));
  }
  return out;
}

void Trainer::apply_gradients(const TrainGradients& grads) {
  Session& s = session_;
  GaussianSet& g = s.scene.gaussians;
  TrainingState& st = s.state;
  const TrainConfig& cfg = s.config;

  st.adam_positions.step(g.positions, grads.d_positions, position_lr());
  st.adam_rotations.step(g.rotations, grads.d_rotations, cfg.lr_rotation);
  st.adam_log_scales.step(g.log_scales, grads.d_log_scales, cfg.lr_log_scale);
  st.adam_opacities.step(g.opacity_logits, grads.d_logits, cfg.lr_opacity);
  st.adam_colours.step(g.colours, grads.d_colours, cfg.lr_colour);

  if (cfg.enable_uncertainty && !s.net->frozen()) {
    st.adam_mlp.step(s.net->parameters(), grads.d_mlp, cfg.lr_mlp);
    const auto grids = s.encoder->grids();
    for (std::size_t slot = 0; slot < grids.size(); ++slot) {
      if (!grids[slot]) continue;
      st.adam_tables[slot].step(grids[slot]->tables(),
                                grads.d_tables.by_grid[slot], cfg.lr_tables);
    }
  }

  g.renormalize_rotations();
  ++audit_.gradient_steps;
}

StepInfo Trainer::step() {
  Session& s = session_;
  const TrainConfig& cfg = s.config;
  const int iter = s.state.iteration;

  const std::size_t n_train = s.scene.train_views.size();
  if (n_train == 0)
    throw Error(ErrorCode::kEmptyScene, "no train views");

  // Abort with a diagnostic before a poisoned Gaussian can degrade silently.
  {
    const GaussianSet& g = s.scene.gaussians;
    std::string bad;
    int listed = 0;
    for (std::size_t i = 0; i < g.count(); ++i) {
      bool finite = std::isfinite(g.opacity_logits[i]);
      for (int k = 0; k < 3; ++k)
        finite = finite && std::isfinite(g.positions[3 * i + k]) &&
                 std::isfinite(g.log_scales[3 * i + k]);
      for (int k = 0; k < 4; ++k)
        finite = finite && std::isfinite(g.rotations[4 * i + k]);
      for (int k = 0; k < g.colour_dim(); ++k)
        finite = finite && std::isfinite(g.colours[g.colour_dim() * i + k]);
      if (!finite && listed < 8) {
        bad += (listed ? "," : "") + std::to_string(i);
        ++listed;
      }
    }
    if (!bad.empty())
      throw Error(ErrorCode::kNumeric,
                  "non-finite parameters at iteration " +
                      std::to_string(iter) + "; Gaussians: " + bad);
  }

  const std::size_t view_index =
      rng_.word(kViewSelectStream, static_cast<std::uint64_t>(iter)) % n_train;

  const TrainGradients grads = compute_gradients(view_index);
  if (!std::isfinite(grads.loss))
    throw Error(ErrorCode::kNumeric,
                "non-finite loss at iteration " + std::to_string(iter) +
                    " (parameters finite; check the reference images)");
  apply_gradients(grads);
  s.state.iteration = iter + 1;

  MetricRow row;
  row.iteration = s.state.iteration;
  row.loss = grads.loss;
  row.l1 = grads.l1;
  row.dssim = grads.dssim;

  if (cfg.freeze_check_interval > 0 &&
      s.state.iteration % cfg.freeze_check_interval == 0) {
    row.train_psnr = eval_psnr(false);
    if (!s.scene.test_views.empty()) row.test_psnr = eval_psnr(true);
    check_freeze(row.train_psnr);
  }
  if (cfg.prune_interval > 0 && cfg.prune_opacity_threshold > 0.0 &&
      s.state.iteration % cfg.prune_interval == 0 &&
      s.state.iteration <=
          cfg.iterations * (1.0 - cfg.prune_disable_last_fraction)) {
    prune(cfg.prune_opacity_threshold);
  }
  row.n_gaussians = s.scene.gaussians.count();
  row.frozen = s.net->frozen();
  s.state.metric_log.push_back(row);

  StepInfo info;
  info.view_index = static_cast<int>(view_index);
  info.loss = grads.loss;
  info.l1 = grads.l1;
  info.dssim = grads.dssim;
  return info;
}

void Trainer::train() {
  while (session_.state.iteration < session_.config.iterations) step();
}

void Trainer::check_freeze(double current_train_psnr) {
  TrainingState& st = session_.state;
  if (!session_.net->frozen() &&
      current_train_psnr - st.best_psnr_at_last_check <
          session_.config.freeze_epsilon) {
    session_.net->freeze();
  }
  st.best_psnr_at_last_check =
      std::max(st.best_psnr_at_last_check, current_train_psnr);
}

PruneReport Trainer::prune(double threshold) {
  // Threshold 1.0 is allowed through so the stronger empty-scene error fires.
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::kDomain, "prune threshold must lie in (0,1]");
  GaussianSet& g = session_.scene.gaussians;
  PruneReport report;
  for (std::size_t i = 0; i < g.count(); ++i)
    if (safe_opacity(g.opacity_logits[i]) < threshold)
      report.removed.push_back(i);
  if (!report.removed.empty() && report.removed.size() == g.count())
    throw Error(ErrorCode::kEmptyScene,
                "pruning at threshold " + std::to_string(threshold) +
                    " would remove every Gaussian");
  if (report.removed.empty()) return report;

  g.remove(report.removed);
  TrainingState& st = session_.state;
  st.adam_positions.remove_rows(report.removed, 3);
  st.adam_rotations.remove_rows(report.removed, 4);
  st.adam_log_scales.remove_rows(report.removed, 3);
  st.adam_opacities.remove_rows(report.removed, 1);
  st.adam_colours.remove_rows(report.removed, g.colour_dim());
  ++audit_.prune_events;
  return report;
}

}  // namespace ugs
