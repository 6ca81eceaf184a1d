#pragma once

#include <vector>

#include "ugs/core/image.hpp"

namespace ugs {

/// Composite colour reconstruction loss: mean absolute error plus
/// lambda * (1 - SSIM)/2, with the analytic gradient w.r.t. the rendered
/// image. The D-SSIM term uses the shared differentiable SSIM core
/// (11x11 Gaussian window, zero-padded), which accepts any image size.
struct ColourLoss {
  double loss = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
  std::vector<double> d_rendered;  // 3*w*h, empty unless requested
};

ColourLoss colour_loss(const ImageBuffer& rendered,
                       const ImageBuffer& reference, double lambda,
                       bool want_gradient);

}  // namespace ugs
