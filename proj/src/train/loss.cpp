#include "ugs/train/loss.hpp"

#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/metrics/metrics.hpp"

namespace ugs {

ColourLoss colour_loss(const ImageBuffer& rendered,
                       const ImageBuffer& reference, double lambda,
                       bool want_gradient) {
  if (rendered.width != reference.width || rendered.height != reference.height)
    throw Error(ErrorCode::kDimension,
                "rendered/reference image dimensions differ");
  const std::size_t n = rendered.pixels.size();

  ColourLoss result;
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    l1 += std::fabs(rendered.pixels[i] - reference.pixels[i]);
  l1 /= static_cast<double>(n);
  result.l1 = l1;

  std::vector<double> d_ssim;
  const double s = ssim_core(rendered, reference,
                             want_gradient ? &d_ssim : nullptr);
  result.dssim = (1.0 - s) / 2.0;
  result.loss = result.l1 + lambda * result.dssim;

  if (want_gradient) {
    result.d_rendered.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = rendered.pixels[i] - reference.pixels[i];
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      result.d_rendered[i] = sign * inv_n - 0.5 * lambda * d_ssim[i];
    }
  }
  return result;
}

}  // namespace ugs
