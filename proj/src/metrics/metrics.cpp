#include "ugs/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ugs/core/error.hpp"
#include "ugs/kernels/kernels.hpp"

namespace ugs {

namespace {

void require_same_dims(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorCode::kDimension, "image dimensions differ");
}

std::vector<double> gaussian_window_1d() {
  std::vector<double> w(kSsimWindow);
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable zero-padded convolution of a single-channel plane.
void conv_same(const std::vector<double>& src, int w, int h,
               const std::vector<double>& kernel, std::vector<double>& tmp,
               std::vector<double>& dst) {
  const int half = static_cast<int>(kernel.size()) / 2;
  tmp.assign(src.size(), 0.0);
  dst.assign(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int xx = x + k;
        if (xx < 0 || xx >= w) continue;
        s += kernel[k + half] * src[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int yy = y + k;
        if (yy < 0 || yy >= h) continue;
        s += kernel[k + half] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      dst[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_dims(a, b);
  double l1 = 0.0, l2 = 0.0;
  kernels::active().abs_sq_diff_sums(a.pixels.data(), b.pixels.data(),
                                     a.pixels.size(), &l1, &l2);
  const double mse = l2 / static_cast<double>(a.pixels.size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_dims(a, b);
  if (a.width < kSsimWindow || a.height < kSsimWindow)
    throw Error(ErrorCode::kDimension,
                "image smaller than the SSIM window (" +
                    std::to_string(kSsimWindow) + "px)");
  return ssim_core(a, b, nullptr);
}

double ssim_core(const ImageBuffer& a, const ImageBuffer& b,
                 std::vector<double>* d_a) {
  require_same_dims(a, b);
  const int w = a.width;
  const int h = a.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::vector<double> window = gaussian_window_1d();

  if (d_a) d_a->assign(3 * n, 0.0);

  // Identical images sit at the SSIM maximum: the analytic gradient is
  // exactly zero there, so return it without the rounding noise of the
  // general path (optimisers normalise gradients and would amplify it).
  if (a.pixels == b.pixels) return 1.0;

  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  std::vector<double> mu_x, mu_y, m_xx, m_yy, m_xy, tmp;
  std::vector<double> g_mu(n), g_xx(n), g_xy(n), c_mu, c_xx, c_xy;

  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    for (std::size_t p = 0; p < n; ++p) {
      x[p] = a.pixels[3 * p + ch];
      y[p] = b.pixels[3 * p + ch];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    conv_same(x, w, h, window, tmp, mu_x);
    conv_same(y, w, h, window, tmp, mu_y);
    conv_same(xx, w, h, window, tmp, m_xx);
    conv_same(yy, w, h, window, tmp, m_yy);
    conv_same(xy, w, h, window, tmp, m_xy);

    for (std::size_t p = 0; p < n; ++p) {
      const double sxx = m_xx[p] - mu_x[p] * mu_x[p];
      const double syy = m_yy[p] - mu_y[p] * mu_y[p];
      const double sxy = m_xy[p] - mu_x[p] * mu_y[p];
      const double a1 = 2.0 * mu_x[p] * mu_y[p] + kSsimC1;
      const double a2 = 2.0 * sxy + kSsimC2;
      const double b1 = mu_x[p] * mu_x[p] + mu_y[p] * mu_y[p] + kSsimC1;
      const double b2 = sxx + syy + kSsimC2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;

      if (d_a) {
        // Partials w.r.t. the raw window statistics of the first image.
        const double inv_bb = 1.0 / (b1 * b2);
        const double ds_da1 = a2 * inv_bb;
        const double ds_da2 = a1 * inv_bb;
        const double ds_db1 = -s / b1;
        const double ds_db2 = -s / b2;
        g_mu[p] = ds_da1 * 2.0 * mu_y[p] + ds_db1 * 2.0 * mu_x[p] +
                  ds_da2 * -2.0 * mu_y[p] + ds_db2 * -2.0 * mu_x[p];
        g_xx[p] = ds_db2;
        g_xy[p] = ds_da2 * 2.0;
      }
    }

    if (d_a) {
      conv_same(g_mu, w, h, window, tmp, c_mu);
      conv_same(g_xx, w, h, window, tmp, c_xx);
      conv_same(g_xy, w, h, window, tmp, c_xy);
      const double scale = 1.0 / (3.0 * static_cast<double>(n));
      for (std::size_t p = 0; p < n; ++p)
        (*d_a)[3 * p + ch] =
            scale * (c_mu[p] + 2.0 * x[p] * c_xx[p] + y[p] * c_xy[p]);
    }
  }
  return total / (3.0 * static_cast<double>(n));
}

void MetricReport::finalize() {
  mean_psnr = 0.0;
  mean_ssim = 0.0;
  if (per_view.empty()) return;
  for (const ViewMetrics& v : per_view) {
    mean_psnr += v.psnr;
    mean_ssim += v.ssim;
  }
  mean_psnr /= static_cast<double>(per_view.size());
  mean_ssim /= static_cast<double>(per_view.size());
}

std::string MetricReport::to_csv() const {
  std::string out = "view,psnr,ssim\n";
  char buf[96];
  for (const ViewMetrics& v : per_view) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", v.view_index, v.psnr,
                  v.ssim);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g\n", mean_psnr, mean_ssim);
  out += buf;
  return out;
}

UncertaintyHistogram make_uncertainty_histogram(
    const std::vector<double>& values, int iteration) {
  UncertaintyHistogram h;
  h.iteration = iteration;
  h.bin_edges.resize(UncertaintyHistogram::kBins + 1);
  for (int i = 0; i <= UncertaintyHistogram::kBins; ++i)
    h.bin_edges[i] = static_cast<double>(i) / UncertaintyHistogram::kBins;
  h.counts.assign(UncertaintyHistogram::kBins, 0);
  h.total = values.size();
  if (values.empty()) return h;

  double sum = 0.0;
  std::size_t ambiguous = 0;
  for (double u : values) {
    int bin = static_cast<int>(u * UncertaintyHistogram::kBins);
    bin = std::clamp(bin, 0, UncertaintyHistogram::kBins - 1);
    ++h.counts[bin];
    sum += u;
    if (u >= kAmbiguousLo && u <= kAmbiguousHi) ++ambiguous;
  }
  h.mean = sum / static_cast<double>(values.size());
  h.ambiguous_fraction =
      static_cast<double>(ambiguous) / static_cast<double>(values.size());

  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  h.median = sorted.size() % 2 == 1
                 ? sorted[mid]
                 : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return h;
}

std::string UncertaintyHistogram::to_csv() const {
  std::string out = "bin_lo,bin_hi,count\n";
  char buf[96];
  for (int i = 0; i < kBins; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu\n", bin_edges[i],
                  bin_edges[i + 1], counts[i]);
    out += buf;
  }
  return out;
}

}  // namespace ugs
