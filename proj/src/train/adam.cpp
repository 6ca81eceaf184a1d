#include "ugs/train/adam.hpp"

#include <cmath>

#include "ugs/core/error.hpp"

namespace ugs {

void AdamState::step(std::span<double> params, std::span<const double> grads,
                     double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw Error(ErrorCode::kDimension, "Adam buffers disagree on size");
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grads[i];
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
  }
}

void AdamState::remove_rows(const std::vector<std::size_t>& sorted_indices,
                            int row_width) {
  if (sorted_indices.empty()) return;
  const std::size_t n_rows = m_.size() / row_width;
  std::vector<bool> drop(n_rows, false);
  for (std::size_t idx : sorted_indices) drop[idx] = true;
  std::size_t out = 0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (drop[r]) continue;
    if (out != r) {
      for (int k = 0; k < row_width; ++k) {
        m_[out * row_width + k] = m_[r * row_width + k];
        v_[out * row_width + k] = v_[r * row_width + k];
      }
    }
    ++out;
  }
  m_.resize(out * row_width);
  v_.resize(out * row_width);
}

}  // namespace ugs
