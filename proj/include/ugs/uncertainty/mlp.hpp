#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ugs {

/// Per-Gaussian, per-view uncertainty values in (0,1).
struct UncertaintyBatch {
  std::vector<double> values;
  int view_id = -1;
};

/// Fully-connected network with ReLU hidden layers and a sigmoid output,
/// mapping an encoded per-Gaussian feature row to uncertainty u in (0,1).
/// All weights and biases live in one flat parameter vector (layer by layer,
/// W row-major then bias) so the optimizer and checkpoints treat the network
/// as a single parameter group.
class UncertaintyNet {
 public:
  /// widths = {input, hidden..., 1}.
  explicit UncertaintyNet(std::vector<int> widths);

  /// input -> 64 -> 64 -> 1.
  static UncertaintyNet make_default(int input_dim);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  /// Hidden layers get He-style uniform weights; the output layer starts at
  /// zero so the initial prediction is exactly 0.5 for every input.
  void initialize(std::uint64_t seed);

  bool frozen() const { return frozen_; }
  void set_frozen(bool f) { frozen_ = f; }
  /// One-way and idempotent. A frozen net reports zero parameter gradients
  /// but keeps propagating input gradients.
  void freeze() { frozen_ = true; }

  struct Workspace {
    std::vector<double> activations;  // input + post-ReLU hiddens + output z
  };

  double predict_one(std::span<const double> input,
                     Workspace* workspace = nullptr) const;

  /// rows = n concatenated input rows of input_dim() values each.
  UncertaintyBatch predict(std::span<const double> rows, std::size_t n,
                           int view_id = -1) const;

  /// Reverse pass for one row previously run through predict_one with the
  /// same workspace. Accumulates into param_grads (size parameter_count(),
  /// skipped when frozen) and writes d(loss)/d(input) into input_grad when
  /// non-empty.
  void backward_one(const Workspace& workspace, double upstream,
                    std::span<double> param_grads,
                    std::span<double> input_grad) const;

 private:
  std::vector<int> widths_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offsets_;  // per layer
  std::vector<std::size_t> bias_offsets_;
  bool frozen_ = false;
};

}  // namespace ugs
