#pragma once

#include <string>
#include <vector>

#include "ugs/core/image.hpp"

namespace ugs {

// SSIM constants: 11x11 Gaussian window, sigma 1.5, K1/K2 = 0.01/0.03 at
// dynamic range 1. Windows are zero-padded so every pixel produces a score.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Peak signal-to-noise ratio in dB over all channels, peak 1.0, capped at
/// 100 dB (identical images hit the cap).
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean structural similarity. Requires both dimensions >= the window size.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// SSIM for any image size (zero-padded windows), optionally with the
/// analytic gradient w.r.t. the first image. This is the differentiable core
/// behind both ssim() and the D-SSIM training loss.
double ssim_core(const ImageBuffer& a, const ImageBuffer& b,
                 std::vector<double>* d_a);

struct ViewMetrics {
  int view_index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<ViewMetrics> per_view;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;

  void finalize();  // fills the aggregate means
  std::string to_csv() const;
};

struct UncertaintyHistogram {
  static constexpr int kBins = 50;
  std::vector<double> bin_edges;       // kBins + 1, uniform over [0,1]
  std::vector<std::size_t> counts;     // kBins
  std::size_t total = 0;
  double mean = 0.0;
  double median = 0.0;
  double ambiguous_fraction = 0.0;     // mass with u in [0.47, 0.53]
  int iteration = -1;

  std::string to_csv() const;          // bin_lo,bin_hi,count rows
};

inline constexpr double kAmbiguousLo = 0.47;
inline constexpr double kAmbiguousHi = 0.53;

UncertaintyHistogram make_uncertainty_histogram(
    const std::vector<double>& values, int iteration);

}  // namespace ugs
