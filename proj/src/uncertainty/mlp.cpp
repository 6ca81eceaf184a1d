#include "ugs/uncertainty/mlp.hpp"

#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"
#include "ugs/core/rng.hpp"
#include "ugs/kernels/kernels.hpp"

namespace ugs {

UncertaintyNet::UncertaintyNet(std::vector<int> widths)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2)
    throw Error(ErrorCode::kConfig, "network needs at least input and output");
  if (widths_.back() != 1)
    throw Error(ErrorCode::kConfig, "uncertainty net output width must be 1");
  for (int w : widths_)
    if (w < 1) throw Error(ErrorCode::kConfig, "layer widths must be positive");

  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weight_offsets_.push_back(total);
    total += static_cast<std::size_t>(widths_[l + 1]) * widths_[l];
    bias_offsets_.push_back(total);
    total += widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

UncertaintyNet UncertaintyNet::make_default(int input_dim) {
  return UncertaintyNet({input_dim, 64, 64, 1});
}

void UncertaintyNet::initialize(std::uint64_t seed) {
  const CounterRng rng(seed);
  const std::size_t n_layers = widths_.size() - 1;
  std::uint64_t draw = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const bool output_layer = l + 1 == n_layers;
    const double limit = output_layer ? 0.0 : std::sqrt(6.0 / fan_in);
    double* w = params_.data() + weight_offsets_[l];
    for (int i = 0; i < fan_out * fan_in; ++i)
      w[i] = limit * (2.0 * rng.uniform(0x4D4C50u, draw++) - 1.0);
    double* b = params_.data() + bias_offsets_[l];
    for (int i = 0; i < fan_out; ++i) b[i] = 0.0;
  }
}

double UncertaintyNet::predict_one(std::span<const double> input,
                                   Workspace* workspace) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw Error(ErrorCode::kDimension,
                "uncertainty-net input width mismatch: got " +
                    std::to_string(input.size()) + ", expected " +
                    std::to_string(input_dim()));

  const auto& k = kernels::active();
  std::vector<double> local;
  std::vector<double>* acts = workspace ? &workspace->activations : &local;
  std::size_t total_act = 0;
  for (int w : widths_) total_act += w;
  acts->assign(total_act, 0.0);

  double* a = acts->data();
  std::copy(input.begin(), input.end(), a);
  std::size_t in_at = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in_w = widths_[l];
    const int out_w = widths_[l + 1];
    double* out = a + in_at + in_w;
    k.dense_forward(params_.data() + weight_offsets_[l],
                    params_.data() + bias_offsets_[l], out_w, in_w, a + in_at,
                    out);
    if (l + 2 < widths_.size()) {
      for (int j = 0; j < out_w; ++j) out[j] = out[j] > 0.0 ? out[j] : 0.0;
    }
    in_at += in_w;
  }
  const double z = (*acts)[total_act - 1];
  // sigmoid saturates to exactly 1.0 past ~z=37; keep the contract u < 1.
  return std::min(sigmoid(z), std::nextafter(1.0, 0.0));
}

UncertaintyBatch UncertaintyNet::predict(std::span<const double> rows,
                                         std::size_t n, int view_id) const {
  if (rows.size() != n * static_cast<std::size_t>(input_dim()))
    throw Error(ErrorCode::kDimension, "uncertainty-net batch size mismatch");
  UncertaintyBatch batch;
  batch.view_id = view_id;
  batch.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    batch.values[i] =
        predict_one(rows.subspan(i * input_dim(), input_dim()), nullptr);
  return batch;
}

void UncertaintyNet::backward_one(const Workspace& workspace, double upstream,
                                  std::span<double> param_grads,
                                  std::span<double> input_grad) const {
  const bool want_params = !param_grads.empty() && !frozen_;
  if (!param_grads.empty() && param_grads.size() != params_.size())
    throw Error(ErrorCode::kDimension, "parameter gradient size mismatch");
  if (!input_grad.empty() &&
      static_cast<int>(input_grad.size()) != input_dim())
    throw Error(ErrorCode::kDimension, "input gradient size mismatch");
  std::size_t total_act = 0;
  for (int w : widths_) total_act += w;
  if (workspace.activations.size() != total_act)
    throw Error(ErrorCode::kContract,
                "backward_one requires the workspace of a forward pass");

  const auto& k = kernels::active();
  const double* acts = workspace.activations.data();
  const double z = acts[total_act - 1];
  const double u = sigmoid(z);

  // delta for the layer currently being processed (starts at the output).
  std::vector<double> delta{upstream * sigmoid_derivative(u)};
  std::vector<double> prev_delta;

  // Offset of layer li's input block: total minus all blocks from li on.
  std::size_t in_at = total_act - widths_.back();
  for (std::size_t li = widths_.size() - 1; li-- > 0;) {
    const int in_w = widths_[li];
    const int out_w = widths_[li + 1];
    in_at -= in_w;
    const double* layer_in = acts + in_at;
    const double* w = params_.data() + weight_offsets_[li];

    if (want_params) {
      double* gw = param_grads.data() + weight_offsets_[li];
      double* gb = param_grads.data() + bias_offsets_[li];
      for (int j = 0; j < out_w; ++j) {
        k.axpy(delta[j], layer_in, gw + static_cast<std::size_t>(j) * in_w,
               in_w);
        gb[j] += delta[j];
      }
    }

    const bool need_below = li > 0 || !input_grad.empty();
    if (!need_below) break;
    prev_delta.assign(in_w, 0.0);
    for (int j = 0; j < out_w; ++j)
      k.axpy(delta[j], w + static_cast<std::size_t>(j) * in_w,
             prev_delta.data(), in_w);
    if (li > 0) {
      // ReLU mask of the layer input (which is a post-ReLU activation).
      for (int i = 0; i < in_w; ++i)
        if (layer_in[i] <= 0.0) prev_delta[i] = 0.0;
    }
    delta.swap(prev_delta);
  }

  if (!input_grad.empty())
    std::copy(delta.begin(), delta.end(), input_grad.begin());
}

}  // namespace ugs
