#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ugs/core/rng.hpp"
#include "ugs/kernels/kernels.hpp"

using namespace ugs;

namespace {

kernels::RowBlend random_blend(const CounterRng& rng, std::uint64_t key,
                               double t_min) {
  kernels::RowBlend g;
  g.mean_x = 16.0 * rng.uniform(1, key, 0);
  g.mean_y = 16.0 * rng.uniform(1, key, 1);
  // Random SPD inverse covariance.
  const double a = 0.05 + rng.uniform(1, key, 2);
  const double c = 0.05 + rng.uniform(1, key, 3);
  const double b = 0.9 * std::sqrt(a * c) * (2.0 * rng.uniform(1, key, 4) - 1.0);
  g.inv_a = a;
  g.inv_b = b;
  g.inv_c = c;
  g.opacity = 0.05 + 0.9 * rng.uniform(1, key, 5);
  for (int k = 0; k < 3; ++k) g.colour[k] = 2.0 * rng.uniform(1, key, 6 + k) - 0.5;
  g.t_min = t_min;
  return g;
}

struct RowState {
  std::vector<double> t, r, g, b, w;
  double ws = 0.0;
  explicit RowState(const CounterRng& rng, std::uint64_t key, int n)
      : t(n), r(n), g(n), b(n), w(n) {
    for (int i = 0; i < n; ++i) {
      t[i] = rng.uniform(2, key, i);
      r[i] = rng.uniform(3, key, i);
      g[i] = rng.uniform(4, key, i);
      b[i] = rng.uniform(5, key, i);
      w[i] = rng.uniform(6, key, i);
    }
  }
};

}  // namespace

TEST_CASE("scalar blend_row matches the per-pixel formula") {
  kernels::RowBlend g;
  g.mean_x = 3.5;
  g.mean_y = 2.5;
  g.inv_a = 0.5;
  g.inv_b = 0.1;
  g.inv_c = 0.7;
  g.opacity = 0.6;
  g.colour[0] = 1.0;
  g.colour[1] = 0.25;
  g.colour[2] = 0.0;

  std::vector<double> t(8, 1.0), r(8, 0.0), gg(8, 0.0), b(8, 0.0), w(8, 0.0);
  double ws = 0.0;
  kernels::scalar().blend_row(g, 0, 8, 2.5, t.data(), r.data(), gg.data(),
                              b.data(), w.data(), &ws);

  // Pixel 3: dx = 0, dy = 0 -> density 1, alpha = 0.6.
  CHECK(r[3] == doctest::Approx(0.6));
  CHECK(t[3] == doctest::Approx(0.4));
  // Pixel 5: dx = 2, dy = 0 -> power = -0.5*inv_a*4 = -1.
  const double alpha5 = 0.6 * std::exp(-1.0);
  CHECK(t[5] == doctest::Approx(1.0 - alpha5));
  CHECK(r[5] == doctest::Approx(alpha5));
  double expect_ws = 0.0;
  for (int x = 0; x < 8; ++x) expect_ws += w[x];
  CHECK(ws == doctest::Approx(expect_ws));
}

TEST_CASE("AVX2 blend_row is bit-identical to scalar") {
  if (!kernels::avx2_supported()) return;
  const CounterRng rng(99);
  const auto* vec = kernels::avx2();
  REQUIRE(vec != nullptr);

  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const double t_min = trial % 3 == 0 ? 1e-1 : 0.0;  // exercise the mask
    const kernels::RowBlend g = random_blend(rng, trial, t_min);
    const int n = 1 + static_cast<int>(rng.word(7, trial) % 21);

    RowState a(rng, trial, n), b(rng, trial, n);
    kernels::scalar().blend_row(g, 3, 3 + n, 7.25, a.t.data(), a.r.data(),
                                a.g.data(), a.b.data(), a.w.data(), &a.ws);
    vec->blend_row(g, 3, 3 + n, 7.25, b.t.data(), b.r.data(), b.g.data(),
                   b.b.data(), b.w.data(), &b.ws);

    for (int i = 0; i < n; ++i) {
      CHECK(a.t[i] == b.t[i]);
      CHECK(a.r[i] == b.r[i]);
      CHECK(a.g[i] == b.g[i]);
      CHECK(a.b[i] == b.b[i]);
      CHECK(a.w[i] == b.w[i]);
    }
    CHECK(a.ws == b.ws);
  }
}

TEST_CASE("AVX2 axpy is bit-identical to scalar") {
  if (!kernels::avx2_supported()) return;
  const CounterRng rng(5);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.word(1, trial) % 67;
    std::vector<double> x(n), y1(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal(2, trial, i);
      y1[i] = y2[i] = rng.normal(3, trial, i);
    }
    const double a = rng.normal(4, trial);
    kernels::scalar().axpy(a, x.data(), y1.data(), n);
    kernels::avx2()->axpy(a, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);
  }
}

TEST_CASE("AVX2 dense_forward matches scalar within reduction tolerance") {
  if (!kernels::avx2_supported()) return;
  const CounterRng rng(7);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const int rows = 1 + static_cast<int>(rng.word(1, trial) % 64);
    const int cols = 1 + static_cast<int>(rng.word(2, trial) % 70);
    std::vector<double> w(static_cast<std::size_t>(rows) * cols), bias(rows),
        x(cols), y1(rows), y2(rows);
    for (auto& v : w) v = rng.normal(3, trial, &v - w.data());
    for (int j = 0; j < rows; ++j) bias[j] = rng.normal(4, trial, j);
    for (int k = 0; k < cols; ++k) x[k] = rng.normal(5, trial, k);
    kernels::scalar().dense_forward(w.data(), bias.data(), rows, cols,
                                    x.data(), y1.data());
    kernels::avx2()->dense_forward(w.data(), bias.data(), rows, cols, x.data(),
                                   y2.data());
    for (int j = 0; j < rows; ++j)
      CHECK(y1[j] == doctest::Approx(y2[j]).epsilon(1e-12));
  }
}

TEST_CASE("AVX2 abs/sq reductions match scalar within tolerance") {
  if (!kernels::avx2_supported()) return;
  const CounterRng rng(11);
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.word(1, trial) % 300;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal(2, trial, i);
      b[i] = rng.normal(3, trial, i);
    }
    double l1a = 0, l2a = 0, l1b = 0, l2b = 0;
    kernels::scalar().abs_sq_diff_sums(a.data(), b.data(), n, &l1a, &l2a);
    kernels::avx2()->abs_sq_diff_sums(a.data(), b.data(), n, &l1b, &l2b);
    CHECK(l1a == doctest::Approx(l1b).epsilon(1e-12));
    CHECK(l2a == doctest::Approx(l2b).epsilon(1e-12));
  }
}

TEST_CASE("backend dispatch honours force()") {
  const kernels::Backend original = kernels::active_backend();
  kernels::force(kernels::Backend::kScalar);
  CHECK(kernels::active_backend() == kernels::Backend::kScalar);
  CHECK(kernels::active().blend_row == kernels::scalar().blend_row);
  if (kernels::avx2_supported()) {
    kernels::force(kernels::Backend::kAvx2);
    CHECK(kernels::active_backend() == kernels::Backend::kAvx2);
    CHECK(kernels::active().blend_row == kernels::avx2()->blend_row);
  } else {
    CHECK_THROWS(kernels::force(kernels::Backend::kAvx2));
  }
  kernels::force(kernels::Backend::kAuto);
  CHECK(kernels::backend_name(kernels::Backend::kScalar) == "scalar");
  kernels::force(original == kernels::Backend::kAuto ? kernels::Backend::kAuto
                                                     : original);
}
