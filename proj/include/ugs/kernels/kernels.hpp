#pragma once

#include <cstddef>
#include <string_view>

namespace ugs::kernels {

/// One projected Gaussian, ready to be blended into a pixel row.
/// The inverse screen-space covariance is [[inv_a, inv_b], [inv_b, inv_c]].
struct RowBlend {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double inv_a = 1.0;
  double inv_b = 0.0;
  double inv_c = 1.0;
  double opacity = 0.0;  // effective opacity, in (0,1)
  double colour[3] = {0.0, 0.0, 0.0};
  double t_min = 0.0;    // per-pixel transmittance early-stop; 0 disables
};

// exp(kMinLogWeight) ~ 9.4e-14: contributions below this are dropped.
inline constexpr double kMinLogWeight = -30.0;

/// Function table for the data-parallel inner loops. Scalar entries are the
/// reference; SIMD variants must agree with them (bit-exact for the
/// elementwise kernels, small reduction tolerance otherwise).
struct Kernels {
  /// Front-to-back blend of one Gaussian over pixels [x0, x1) of row
  /// `pixel_y`. `transmittance`, `acc_r/g/b` (premultiplied colour) and
  /// `acc_w` (blend-weight sum) are running per-pixel state, indexed from
  /// 0 == x0. Also adds this Gaussian's total blend weight to `weight_sum`.
  void (*blend_row)(const RowBlend& g, int x0, int x1, double pixel_y,
                    double* transmittance, double* acc_r, double* acc_g,
                    double* acc_b, double* acc_w, double* weight_sum);

  /// y = W x + bias, W row-major [rows x cols].
  void (*dense_forward)(const double* w, const double* bias, int rows,
                        int cols, const double* x, double* y);

  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  /// Accumulates sum|a-b| and sum (a-b)^2 over n entries.
  void (*abs_sq_diff_sums)(const double* a, const double* b, std::size_t n,
                           double* abs_sum, double* sq_sum);
};

enum class Backend { kAuto, kScalar, kAvx2 };

const Kernels& scalar();

/// True when the running CPU can execute the AVX2 variants.
bool avx2_supported();

/// AVX2 kernel table, or nullptr when not compiled in or not supported.
const Kernels* avx2();

/// Dispatched table. Defaults to the best supported backend; honours the
/// UGS_KERNELS environment variable ("scalar" or "avx2") at first use.
const Kernels& active();
Backend active_backend();

/// Overrides the dispatched backend process-wide. kAuto restores detection.
/// Throws if the requested backend is unavailable.
void force(Backend b);

std::string_view backend_name(Backend b);

}  // namespace ugs::kernels
