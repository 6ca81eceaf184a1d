// AVX2 variants of the inner-loop kernels. Each lane replicates the scalar
// reference operation-for-operation (contraction is disabled for these TUs),
// so blend_row and axpy are bit-identical to the scalar backend; the
// reduction kernels differ only in summation order.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "kernels_detail.hpp"
#include "ugs/kernels/kernels.hpp"

namespace ugs::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void blend_row_avx2(const RowBlend& g, int x0, int x1, double pixel_y,
                    double* t, double* ar, double* ag, double* ab, double* aw,
                    double* weight_sum) {
  const int n = x1 - x0;
  const double dy = pixel_y - g.mean_y;
  const double c_dy_dy = g.inv_c * dy * dy;

  const __m256d v_mx = _mm256_set1_pd(g.mean_x);
  const __m256d v_half = _mm256_set1_pd(0.5);
  const __m256d v_neg_half = _mm256_set1_pd(-0.5);
  const __m256d v_inv_a = _mm256_set1_pd(g.inv_a);
  const __m256d v_inv_b = _mm256_set1_pd(g.inv_b);
  const __m256d v_dy = _mm256_set1_pd(dy);
  const __m256d v_cyy = _mm256_set1_pd(c_dy_dy);
  const __m256d v_minlog = _mm256_set1_pd(kMinLogWeight);
  const __m256d v_tmin = _mm256_set1_pd(g.t_min);
  const __m256d v_op = _mm256_set1_pd(g.opacity);
  const __m256d v_one = _mm256_set1_pd(1.0);
  const __m256d v_cr = _mm256_set1_pd(g.colour[0]);
  const __m256d v_cg = _mm256_set1_pd(g.colour[1]);
  const __m256d v_cb = _mm256_set1_pd(g.colour[2]);

  double ws = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const double xd = static_cast<double>(x0 + i);
    const __m256d v_x = _mm256_set_pd(xd + 3.0, xd + 2.0, xd + 1.0, xd);
    const __m256d v_dx = _mm256_sub_pd(_mm256_add_pd(v_x, v_half), v_mx);

    const __m256d v_axx = _mm256_mul_pd(_mm256_mul_pd(v_inv_a, v_dx), v_dx);
    const __m256d v_bxy = _mm256_mul_pd(_mm256_mul_pd(v_inv_b, v_dx), v_dy);
    const __m256d v_power = _mm256_sub_pd(
        _mm256_mul_pd(v_neg_half, _mm256_add_pd(v_axx, v_cyy)), v_bxy);

    const __m256d v_t = _mm256_loadu_pd(t + i);
    const __m256d mask =
        _mm256_and_pd(_mm256_cmp_pd(v_t, v_tmin, _CMP_GE_OQ),
                      _mm256_cmp_pd(v_power, v_minlog, _CMP_GE_OQ));
    if (_mm256_movemask_pd(mask) == 0) continue;

    alignas(32) double p[4];
    _mm256_store_pd(p, v_power);
    const __m256d v_w = _mm256_set_pd(std::exp(p[3]), std::exp(p[2]),
                                      std::exp(p[1]), std::exp(p[0]));
    const __m256d v_alpha = _mm256_mul_pd(v_op, v_w);
    const __m256d v_contrib =
        _mm256_and_pd(_mm256_mul_pd(v_t, v_alpha), mask);

    _mm256_storeu_pd(ar + i,
                     _mm256_add_pd(_mm256_loadu_pd(ar + i),
                                   _mm256_mul_pd(v_contrib, v_cr)));
    _mm256_storeu_pd(ag + i,
                     _mm256_add_pd(_mm256_loadu_pd(ag + i),
                                   _mm256_mul_pd(v_contrib, v_cg)));
    _mm256_storeu_pd(ab + i,
                     _mm256_add_pd(_mm256_loadu_pd(ab + i),
                                   _mm256_mul_pd(v_contrib, v_cb)));
    _mm256_storeu_pd(aw + i,
                     _mm256_add_pd(_mm256_loadu_pd(aw + i), v_contrib));

    alignas(32) double c[4];
    _mm256_store_pd(c, v_contrib);
    ws += c[0];
    ws += c[1];
    ws += c[2];
    ws += c[3];

    const __m256d v_t_new = _mm256_mul_pd(v_t, _mm256_sub_pd(v_one, v_alpha));
    _mm256_storeu_pd(t + i, _mm256_blendv_pd(v_t, v_t_new, mask));
  }
  for (; i < n; ++i)
    detail::blend_pixel(g, x0 + i, pixel_y, t[i], ar[i], ag[i], ab[i], aw[i],
                        ws);
  *weight_sum += ws;
}

void dense_forward_avx2(const double* w, const double* bias, int rows,
                        int cols, const double* x, double* y) {
  for (int j = 0; j < rows; ++j) {
    const double* row = w + static_cast<std::size_t>(j) * cols;
    __m256d acc = _mm256_setzero_pd();
    int k = 0;
    for (; k + 4 <= cols; k += 4) {
      acc = _mm256_add_pd(
          acc, _mm256_mul_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(x + k)));
    }
    double s = bias[j] + hsum(acc);
    for (; k < cols; ++k) s += row[k] * x[k];
    y[j] = s;
  }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d v_a = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v_y = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(v_y, _mm256_mul_pd(v_a, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void abs_sq_diff_sums_avx2(const double* a, const double* b, std::size_t n,
                           double* abs_sum, double* sq_sum) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign_mask, d));
    acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(d, d));
  }
  double l1 = hsum(acc1);
  double l2 = hsum(acc2);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    l1 += std::fabs(d);
    l2 += d * d;
  }
  *abs_sum += l1;
  *sq_sum += l2;
}

}  // namespace

const Kernels* avx2_table() {
  static const Kernels k{blend_row_avx2, dense_forward_avx2, axpy_avx2,
                         abs_sq_diff_sums_avx2};
  return &k;
}

}  // namespace ugs::kernels
