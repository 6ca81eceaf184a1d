#include "ugs/core/gaussian_set.hpp"

#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"

namespace ugs {

void GaussianSet::resize(std::size_t n) {
  positions.assign(3 * n, 0.0);
  rotations.assign(4 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) rotations[4 * i] = 1.0;  // identity
  log_scales.assign(3 * n, 0.0);
  opacity_logits.assign(n, 0.0);
  colours.assign(static_cast<std::size_t>(colour_dim()) * n, 0.0);
}

void GaussianSet::validate() const {
  if (sh_degree != 0 && sh_degree != 1)
    throw Error(ErrorCode::kConfig, "sh_degree must be 0 or 1");
  const std::size_t n = count();
  if (positions.size() != 3 * n || rotations.size() != 4 * n ||
      log_scales.size() != 3 * n ||
      colours.size() != static_cast<std::size_t>(colour_dim()) * n)
    throw Error(ErrorCode::kDimension,
                "GaussianSet arrays disagree on the Gaussian count");
}

double GaussianSet::opacity(std::size_t i) const {
  return sigmoid(opacity_logits[i]);
}

void GaussianSet::renormalize_rotations() {
  for (std::size_t i = 0; i < count(); ++i) {
    double* q = &rotations[4 * i];
    const double norm =
        std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (norm <= 0.0) {
      q[0] = 1.0;
      q[1] = q[2] = q[3] = 0.0;
      continue;
    }
    // Skip near-unit quaternions so renormalisation is bit-idempotent.
    if (std::fabs(norm - 1.0) <= 1e-12) continue;
    for (int k = 0; k < 4; ++k) q[k] /= norm;
  }
}

void GaussianSet::remove(const std::vector<std::size_t>& sorted_indices) {
  if (sorted_indices.empty()) return;
  const std::size_t n = count();
  const int cdim = colour_dim();
  std::vector<bool> drop(n, false);
  for (std::size_t idx : sorted_indices) drop[idx] = true;

  std::size_t out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) continue;
    if (out != i) {
      for (int k = 0; k < 3; ++k) positions[3 * out + k] = positions[3 * i + k];
      for (int k = 0; k < 4; ++k) rotations[4 * out + k] = rotations[4 * i + k];
      for (int k = 0; k < 3; ++k)
        log_scales[3 * out + k] = log_scales[3 * i + k];
      opacity_logits[out] = opacity_logits[i];
      for (int k = 0; k < cdim; ++k)
        colours[static_cast<std::size_t>(cdim) * out + k] =
            colours[static_cast<std::size_t>(cdim) * i + k];
    }
    ++out;
  }
  positions.resize(3 * out);
  rotations.resize(4 * out);
  log_scales.resize(3 * out);
  opacity_logits.resize(out);
  colours.resize(static_cast<std::size_t>(cdim) * out);
}

}  // namespace ugs
