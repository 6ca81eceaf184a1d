#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ugs/core/rng.hpp"
#include "ugs/core/scene.hpp"
#include "ugs/hashgrid/input_encoder.hpp"
#include "ugs/metrics/metrics.hpp"
#include "ugs/raster/rasterizer.hpp"
#include "ugs/softdrop/softdrop.hpp"
#include "ugs/train/adam.hpp"
#include "ugs/uncertainty/mlp.hpp"

namespace ugs {

struct TrainConfig {
  int iterations = 6000;
  double lambda_dssim = 0.2;        // weight of the D-SSIM term
  double freeze_epsilon = 0.2;      // dB; plateau threshold for freezing
  int freeze_check_interval = 500;  // iterations between plateau checks

  double lr_position = 2e-3;
  double lr_position_final = 2e-5;  // exponential decay target at `iterations`
  double lr_rotation = 5e-3;
  double lr_log_scale = 2e-2;
  double lr_opacity = 5e-2;
  double lr_colour = 1e-2;
  double lr_mlp = 1e-3;
  double lr_tables = 5e-3;

  double prune_opacity_threshold = 0.005;
  int prune_interval = 500;
  double prune_disable_last_fraction = 0.2;

  std::uint64_t seed = 1;
  int threads = 1;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();

  // Ablation switches. With uncertainty disabled the blended opacity is the
  // raw sigmoid(alpha_logit) and the net/encoder receive no gradients.
  bool enable_uncertainty = true;
  bool enable_modulation = true;
  bool enable_dropout = true;

  void validate() const;
};

/// One metric-log row; PSNR columns are NaN outside evaluation iterations.
struct MetricRow {
  int iteration = 0;
  double loss = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
  double train_psnr = std::numeric_limits<double>::quiet_NaN();
  double test_psnr = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_gaussians = 0;
  bool frozen = false;
};

std::string metric_log_to_csv(const std::vector<MetricRow>& rows);

struct TrainingState {
  int iteration = 0;
  double best_psnr_at_last_check =
      -std::numeric_limits<double>::infinity();
  AdamState adam_positions, adam_rotations, adam_log_scales, adam_opacities,
      adam_colours, adam_mlp;
  std::vector<AdamState> adam_tables;  // one per active grid slot
  std::vector<MetricRow> metric_log;
};

/// Everything a run owns: the scene, the uncertainty pipeline, the optimizer
/// state and the configs. Checkpoints serialize this bundle completely.
struct Session {
  Scene scene;
  EncodingConfig encoding_config;
  std::unique_ptr<InputEncoder> encoder;
  std::unique_ptr<UncertaintyNet> net;
  SoftDropConfig softdrop;
  TrainConfig config;
  TrainingState state;
};

/// Builds a fresh session around a loaded scene: encoder domain from the
/// scene box, default-architecture net, optimizer state at zero.
Session make_session(Scene scene, const EncodingConfig& encoding,
                     const SoftDropConfig& softdrop, const TrainConfig& config);

struct PruneReport {
  std::vector<std::size_t> removed;
};

struct StepInfo {
  int view_index = 0;
  double loss = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
};

/// Mutation audit: the only code paths that touch opacity logits. There is
/// no reset mechanism; the counter stays zero by construction and tests
/// assert it.
struct OpacityAudit {
  std::int64_t gradient_steps = 0;
  std::int64_t prune_events = 0;
  std::int64_t resets = 0;
};

/// Gradients of the colour loss w.r.t. every trainable group for one view,
/// produced by the full chain: render -> soft dropout -> modulation ->
/// uncertainty net -> input encoder (plus the direct geometry paths).
struct TrainGradients {
  double loss = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
  std::vector<double> d_positions, d_rotations, d_log_scales, d_logits,
      d_colours;
  std::vector<double> d_mlp;
  InputEncoder::TableGrads d_tables;
};

class Trainer {
 public:
  explicit Trainer(Session session);

  Session& session() { return session_; }
  const Session& session() const { return session_; }
  const OpacityAudit& audit() const { return audit_; }

  /// Forward + backward for one train view at the current iteration, without
  /// updating any parameter. step() applies these gradients; tests
  /// finite-difference them.
  TrainGradients compute_gradients(std::size_t view_index) const;

  /// Runs one optimization iteration (one random train view) plus the
  /// scheduled plateau check and pruning, appending a metric row.
  StepInfo step();

  /// Runs until config.iterations is reached.
  void train();

  /// Effective opacities for a view camera under an evaluation mode.
  /// iteration seeds the stochastic mode's q draws.
  std::vector<double> effective_opacities(const Camera& camera, EvalMode mode,
                                          std::uint64_t iteration) const;

  RenderOutput render_view(const Camera& camera, EvalMode mode) const;

  /// Mean PSNR over a split under the deterministic evaluation mode.
  double eval_psnr(bool test_split) const;
  MetricReport eval_report(bool test_split) const;

  /// Plateau rule: freeze the net and the hash tables when the PSNR
  /// improvement since the last check drops below freeze_epsilon. One-way.
  void check_freeze(double current_train_psnr);

  PruneReport prune(double threshold);

  /// Uncertainty values for the Gaussians visible from a view.
  UncertaintyBatch view_uncertainty(const Camera& camera, int view_id) const;
  UncertaintyHistogram uncertainty_histogram(const Camera& camera) const;

 private:
  std::vector<std::size_t> visible_indices(const Camera& camera) const;
  void apply_gradients(const TrainGradients& grads);
  double position_lr() const;

  Session session_;
  OpacityAudit audit_;
  CounterRng rng_;
};

/// Free-function forms of the spec-level operations (thin wrappers).
void freeze(UncertaintyNet& net);

}  // namespace ugs
