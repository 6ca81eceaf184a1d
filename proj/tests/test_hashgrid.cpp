#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>

#include "test_support.hpp"
#include "ugs/core/error.hpp"
#include "ugs/hashgrid/input_encoder.hpp"

using namespace ugs;

namespace {

HashGridEncoder::Config unit_config(int levels = 6, int features = 4) {
  HashGridEncoder::Config c;
  c.dims = 3;
  c.levels = levels;
  c.features_per_level = features;
  c.base_resolution = 16;
  c.growth = 2.0;
  c.log2_table_size = 14;
  c.box_lo = Eigen::Vector3d::Zero();
  c.box_hi = Eigen::Vector3d::Ones();
  return c;
}

}  // namespace

TEST_CASE("output dimension is levels * features (24-d default)") {
  HashGridEncoder enc(unit_config());
  CHECK(enc.output_dim() == 24);
  std::vector<double> out(24);
  const Eigen::Vector3d p(0.3, 0.4, 0.5);
  enc.encode({p.data(), 3}, out);
  CHECK(out.size() == 24);
}

TEST_CASE("hash_index: fixed primes, zero input, determinism") {
  HashGridEncoder enc(unit_config());
  const std::array<std::int64_t, 3> zero = {0, 0, 0};
  CHECK(enc.hash_index({zero.data(), 3}) == 0);

  // (1,0,0) -> 1 * pi1 mod 2^14 = 1.
  const std::array<std::int64_t, 3> ex = {1, 0, 0};
  CHECK(enc.hash_index({ex.data(), 3}) == 1);

  // (0,1,0) -> 2654435761 mod 2^14; hand arithmetic.
  const std::array<std::int64_t, 3> ey = {0, 1, 0};
  CHECK(enc.hash_index({ey.data(), 3}) == (2654435761u & 0x3FFFu));

  const std::array<std::int64_t, 3> mixed = {7, 12, 5};
  const auto once = enc.hash_index({mixed.data(), 3});
  CHECK(enc.hash_index({mixed.data(), 3}) == once);
  CHECK((7u * 1u ^ 12u * 2654435761u ^ 5u * 805459861u) % 16384 == once);
}

TEST_CASE("position on a lattice vertex returns that vertex's table row") {
  auto cfg = unit_config(1, 4);
  HashGridEncoder enc(cfg);
  enc.randomize_tables(3, 0.5);
  // Level 0 resolution 16; (3,5,7)/16 lies exactly on a vertex.
  const Eigen::Vector3d p(3.0 / 16, 5.0 / 16, 7.0 / 16);
  const std::array<std::int64_t, 3> coord = {3, 5, 7};
  const std::uint32_t idx = enc.hash_index({coord.data(), 3});
  std::vector<double> out(4);
  enc.encode({p.data(), 3}, out);
  for (int f = 0; f < 4; ++f)
    CHECK(out[f] == doctest::Approx(enc.tables()[idx * 4 + f]).epsilon(1e-15));
}

TEST_CASE("cell centre equals the mean of the 8 corner rows (direct oracle)") {
  auto cfg = unit_config(1, 4);
  HashGridEncoder enc(cfg);
  enc.randomize_tables(11, 0.5);
  const Eigen::Vector3d p((2.0 + 0.5) / 16, (9.0 + 0.5) / 16, (4.0 + 0.5) / 16);
  std::vector<double> out(4);
  enc.encode({p.data(), 3}, out);

  // Oracle: explicit 8-term weighted sum with weight 1/8 per corner.
  std::array<double, 4> expect = {0, 0, 0, 0};
  for (int c = 0; c < 8; ++c) {
    const std::array<std::int64_t, 3> corner = {2 + (c & 1), 9 + ((c >> 1) & 1),
                                                4 + ((c >> 2) & 1)};
    const std::uint32_t idx = enc.hash_index({corner.data(), 3});
    for (int f = 0; f < 4; ++f) expect[f] += 0.125 * enc.tables()[idx * 4 + f];
  }
  for (int f = 0; f < 4; ++f)
    CHECK(out[f] == doctest::Approx(expect[f]).epsilon(1e-13));
}

TEST_CASE("encode is linear in each coordinate within a cell") {
  HashGridEncoder enc(unit_config());
  enc.randomize_tables(13, 0.3);
  // Finest level resolution 512: stay inside one fine cell.
  const double base = 100.25 / 512.0;
  const double step = 0.2 / 512.0;
  std::vector<double> a(24), b(24), c(24);
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Vector3d p(0.3002, 0.5002, 0.7002);
    p[axis] = base;
    enc.encode({p.data(), 3}, a);
    p[axis] = base + step;
    enc.encode({p.data(), 3}, b);
    p[axis] = base + 2 * step;
    enc.encode({p.data(), 3}, c);
    for (int k = 0; k < 24; ++k)
      CHECK(b[k] == doctest::Approx(0.5 * (a[k] + c[k])).epsilon(1e-12));
  }
}

TEST_CASE("encode_backward: zero upstream, vertex degeneracy") {
  auto cfg = unit_config(1, 2);
  HashGridEncoder enc(cfg);
  enc.randomize_tables(17, 0.4);

  const Eigen::Vector3d vertex(3.0 / 16, 5.0 / 16, 7.0 / 16);
  std::vector<double> tgrad(enc.parameter_count(), 0.0);
  std::array<double, 3> pgrad{};

  // Zero upstream -> all zero.
  std::vector<double> upstream(2, 0.0);
  enc.encode_backward({vertex.data(), 3}, upstream, tgrad,
                      {pgrad.data(), 3});
  for (double v : tgrad) CHECK(v == 0.0);

  // Vertex position: full upstream lands on that vertex's row.
  upstream = {1.5, -2.0};
  std::fill(tgrad.begin(), tgrad.end(), 0.0);
  enc.encode_backward({vertex.data(), 3}, upstream, tgrad, {pgrad.data(), 3});
  const std::array<std::int64_t, 3> coord = {3, 5, 7};
  const std::uint32_t idx = enc.hash_index({coord.data(), 3});
  double sum_abs = 0.0;
  for (double v : tgrad) sum_abs += std::fabs(v);
  CHECK(tgrad[idx * 2 + 0] == doctest::Approx(1.5));
  CHECK(tgrad[idx * 2 + 1] == doctest::Approx(-2.0));
  // Corner rows with zero weight receive nothing (collisions aside, the
  // weighted total must equal the upstream mass).
  CHECK(sum_abs == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("gradient check on 100 random (position, tables, upstream) triples") {
  HashGridEncoder enc(unit_config(4, 2));
  const CounterRng rng(23);
  const int out_dim = enc.output_dim();

  int checked_tables = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    enc.randomize_tables(trial + 1, 0.5);
    Eigen::Vector3d p(0.02 + 0.96 * rng.uniform(1, trial, 0),
                      0.02 + 0.96 * rng.uniform(1, trial, 1),
                      0.02 + 0.96 * rng.uniform(1, trial, 2));
    std::vector<double> upstream(out_dim);
    for (int k = 0; k < out_dim; ++k) upstream[k] = rng.normal(2, trial, k);

    std::vector<double> tgrad(enc.parameter_count(), 0.0);
    Eigen::Vector3d pgrad;
    enc.encode_backward({p.data(), 3}, upstream, tgrad, {pgrad.data(), 3});

    auto objective = [&]() {
      std::vector<double> out(out_dim);
      enc.encode({p.data(), 3}, out);
      double s = 0.0;
      for (int k = 0; k < out_dim; ++k) s += out[k] * upstream[k];
      return s;
    };

    for (int axis = 0; axis < 3; ++axis) {
      const double numeric = test::central_diff(&p[axis], objective, 1e-6);
      CHECK(test::grad_close(pgrad[axis], numeric, 1e-4, 1e-6));
    }
    // Finite-difference a handful of touched table entries.
    if (trial % 10 == 0) {
      int tested = 0;
      for (std::size_t e = 0; e < tgrad.size() && tested < 4; ++e) {
        if (tgrad[e] == 0.0) continue;
        const double numeric =
            test::central_diff(&enc.tables()[e], objective, 1e-6);
        CHECK(test::grad_close(tgrad[e], numeric, 1e-4, 1e-8));
        ++tested;
        ++checked_tables;
      }
    }
  }
  CHECK(checked_tables > 0);
}

TEST_CASE("out-of-box positions clamp, count, and zero the axis gradient") {
  HashGridEncoder enc(unit_config(2, 2));
  enc.randomize_tables(29, 0.4);
  const std::uint64_t before = enc.clamp_events();

  Eigen::Vector3d outside(1.5, 0.5, 0.25);
  Eigen::Vector3d edge(1.0, 0.5, 0.25);
  std::vector<double> out_a(enc.output_dim()), out_b(enc.output_dim());
  enc.encode({outside.data(), 3}, out_a);
  enc.encode({edge.data(), 3}, out_b);
  CHECK(out_a == out_b);
  CHECK(enc.clamp_events() == before + 1);

  std::vector<double> upstream(enc.output_dim(), 1.0);
  std::vector<double> tgrad(enc.parameter_count(), 0.0);
  Eigen::Vector3d pgrad;
  enc.encode_backward({outside.data(), 3}, upstream, tgrad, {pgrad.data(), 3});
  CHECK(pgrad[0] == 0.0);  // clamped axis

  Eigen::Vector3d nan = outside;
  nan[1] = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> scratch(enc.output_dim());
  CHECK_THROWS_AS(enc.encode({nan.data(), 3}, scratch), Error);
}

TEST_CASE("input encoder: (P,0,0,0) passes raw V, R, S through") {
  EncodingConfig cfg;  // defaults: (6,0,0,0)
  InputEncoder enc(cfg, Eigen::Vector3d::Constant(-2),
                   Eigen::Vector3d::Constant(2), 1.0);
  CHECK(enc.output_dim() == 34);

  const Eigen::Vector3d p(0.1, -0.2, 0.3);
  const Eigen::Vector3d v = Eigen::Vector3d(0.3, -0.5, 0.9).normalized();
  Eigen::Vector4d q(0.9, 0.1, -0.2, 0.3);
  q.normalize();
  const Eigen::Vector3d s(0.05, 0.1, 0.2);
  std::vector<double> row(34);
  enc.assemble(p, v, q, s, row);
  for (int k = 0; k < 3; ++k) CHECK(row[24 + k] == v[k]);
  for (int k = 0; k < 4; ++k) CHECK(row[27 + k] == q[k]);
  for (int k = 0; k < 3; ++k) CHECK(row[31 + k] == s[k]);

  // Raw-slot upstream lands directly in the slot gradients.
  std::vector<double> upstream(34);
  const CounterRng rng(31);
  for (int k = 0; k < 34; ++k) upstream[k] = rng.normal(1, k);
  auto tgrads = enc.zero_table_grads();
  InputEncoder::SlotGrads slots;
  enc.backward(p, v, q, s, upstream, tgrads, slots);
  for (int k = 0; k < 3; ++k) CHECK(slots.view[k] == upstream[24 + k]);
  for (int k = 0; k < 4; ++k) CHECK(slots.rotation[k] == upstream[27 + k]);
  for (int k = 0; k < 3; ++k) CHECK(slots.scale[k] == upstream[31 + k]);
}

TEST_CASE("input encoder supports the non-default level allocations") {
  for (const auto& [pl, sl, rl, vl] :
       std::vector<std::tuple<int, int, int, int>>{{5, 0, 0, 1}, {6, 1, 1, 0}}) {
    EncodingConfig cfg;
    cfg.position_levels = pl;
    cfg.scale_levels = sl;
    cfg.rotation_levels = rl;
    cfg.view_levels = vl;
    InputEncoder enc(cfg, Eigen::Vector3d::Constant(-2),
                     Eigen::Vector3d::Constant(2), 1.0);
    const int expect = pl * 4 + (vl ? vl * 4 : 3) + (rl ? rl * 4 : 4) +
                       (sl ? sl * 4 : 3);
    CHECK(enc.output_dim() == expect);
    std::vector<double> row(enc.output_dim());
    const Eigen::Vector3d p(0.0, 0.1, -0.3);
    const Eigen::Vector3d v = Eigen::Vector3d(1, 1, 0).normalized();
    Eigen::Vector4d q(1, 0.2, 0, 0);
    q.normalize();
    enc.assemble(p, v, q, {0.1, 0.2, 0.3}, row);
    for (double x : row) CHECK(std::isfinite(x));
  }
}
