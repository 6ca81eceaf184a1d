#include <cmath>
#include <cstddef>

#include "kernels_detail.hpp"
#include "ugs/kernels/kernels.hpp"

namespace ugs::kernels {
namespace {

void blend_row_scalar(const RowBlend& g, int x0, int x1, double pixel_y,
                      double* t, double* ar, double* ag, double* ab,
                      double* aw, double* weight_sum) {
  double ws = 0.0;
  for (int x = x0; x < x1; ++x) {
    const int i = x - x0;
    detail::blend_pixel(g, x, pixel_y, t[i], ar[i], ag[i], ab[i], aw[i], ws);
  }
  *weight_sum += ws;
}

void dense_forward_scalar(const double* w, const double* bias, int rows,
                          int cols, const double* x, double* y) {
  for (int j = 0; j < rows; ++j) {
    const double* row = w + static_cast<std::size_t>(j) * cols;
    double s = bias[j];
    for (int k = 0; k < cols; ++k) s += row[k] * x[k];
    y[j] = s;
  }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void abs_sq_diff_sums_scalar(const double* a, const double* b, std::size_t n,
                             double* abs_sum, double* sq_sum) {
  double l1 = 0.0;
  double l2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    l1 += std::fabs(d);
    l2 += d * d;
  }
  *abs_sum += l1;
  *sq_sum += l2;
}

}  // namespace

const Kernels& scalar() {
  static const Kernels k{blend_row_scalar, dense_forward_scalar, axpy_scalar,
                         abs_sq_diff_sums_scalar};
  return k;
}

}  // namespace ugs::kernels
