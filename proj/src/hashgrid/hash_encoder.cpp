#include "ugs/hashgrid/hash_encoder.hpp"

#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/core/rng.hpp"

namespace ugs {

namespace {
constexpr std::uint32_t kHashPrimes[4] = {1u, 2654435761u, 805459861u,
                                          3674653429u};
constexpr int kMaxDims = 4;
}  // namespace

double HashGridEncoder::Config::growth_for(int levels, int base, int finest) {
  if (levels <= 1) return 2.0;
  return std::pow(static_cast<double>(finest) / base, 1.0 / (levels - 1));
}

HashGridEncoder::HashGridEncoder(const Config& config) : cfg_(config) {
  if (cfg_.dims < 1 || cfg_.dims > kMaxDims)
    throw Error(ErrorCode::kConfig, "hash grid supports 1..4 input dims");
  if (cfg_.levels < 1 || cfg_.features_per_level < 1)
    throw Error(ErrorCode::kConfig, "levels and features must be positive");
  if (!(cfg_.growth > 1.0))
    throw Error(ErrorCode::kConfig, "growth factor must exceed 1");
  if (cfg_.log2_table_size < 1 || cfg_.log2_table_size > 30)
    throw Error(ErrorCode::kConfig, "log2_table_size out of range");
  if (cfg_.box_lo.size() != cfg_.dims || cfg_.box_hi.size() != cfg_.dims)
    throw Error(ErrorCode::kConfig, "domain box size must match dims");
  for (int k = 0; k < cfg_.dims; ++k)
    if (!(cfg_.box_hi[k] > cfg_.box_lo[k]))
      throw Error(ErrorCode::kConfig, "domain box must have positive extent");
  tables_.assign(static_cast<std::size_t>(cfg_.levels) * table_size() *
                     cfg_.features_per_level,
                 0.0);
}

double HashGridEncoder::resolution(int level) const {
  return cfg_.base_resolution * std::pow(cfg_.growth, level);
}

void HashGridEncoder::randomize_tables(std::uint64_t seed, double scale) {
  const CounterRng rng(seed);
  for (std::size_t i = 0; i < tables_.size(); ++i)
    tables_[i] = (2.0 * rng.uniform(0x7A61B3E5u, i) - 1.0) * scale;
}

std::uint32_t HashGridEncoder::hash_index(
    std::span<const std::int64_t> coord) const {
  std::uint32_t h = 0;
  for (std::size_t k = 0; k < coord.size(); ++k)
    h ^= static_cast<std::uint32_t>(coord[k]) * kHashPrimes[k];
  return h & static_cast<std::uint32_t>(table_size() - 1);
}

void HashGridEncoder::encode(std::span<const double> input,
                             std::span<double> out) const {
  const int d = cfg_.dims;
  const int f = cfg_.features_per_level;
  if (static_cast<int>(input.size()) != d)
    throw Error(ErrorCode::kDimension, "encoder input size mismatch");
  if (static_cast<int>(out.size()) != output_dim())
    throw Error(ErrorCode::kDimension, "encoder output size mismatch");

  double unit[kMaxDims];
  bool clamped = false;
  for (int k = 0; k < d; ++k) {
    if (!std::isfinite(input[k]))
      throw Error(ErrorCode::kNumeric, "non-finite encoder input");
    double v = input[k];
    if (v < cfg_.box_lo[k]) {
      v = cfg_.box_lo[k];
      clamped = true;
    } else if (v > cfg_.box_hi[k]) {
      v = cfg_.box_hi[k];
      clamped = true;
    }
    unit[k] = (v - cfg_.box_lo[k]) / (cfg_.box_hi[k] - cfg_.box_lo[k]);
  }
  if (clamped) clamp_events_.fetch_add(1, std::memory_order_relaxed);

  std::fill(out.begin(), out.end(), 0.0);
  const int corners = 1 << d;
  std::int64_t base[kMaxDims];
  double frac[kMaxDims];
  std::int64_t coord[kMaxDims];

  for (int l = 0; l < cfg_.levels; ++l) {
    const double r = resolution(l);
    for (int k = 0; k < d; ++k) {
      const double x = unit[k] * r;
      base[k] = static_cast<std::int64_t>(std::floor(x));
      frac[k] = x - static_cast<double>(base[k]);
    }
    double* level_out = out.data() + static_cast<std::size_t>(l) * f;
    const double* level_table =
        tables_.data() + static_cast<std::size_t>(l) * table_size() * f;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        const bool hi = (c >> k) & 1;
        coord[k] = base[k] + (hi ? 1 : 0);
        w *= hi ? frac[k] : 1.0 - frac[k];
      }
      const std::uint32_t idx = hash_index({coord, static_cast<std::size_t>(d)});
      const double* row = level_table + static_cast<std::size_t>(idx) * f;
      for (int j = 0; j < f; ++j) level_out[j] += w * row[j];
    }
  }
}

void HashGridEncoder::encode_backward(std::span<const double> input,
                                      std::span<const double> upstream,
                                      std::span<double> table_grads,
                                      std::span<double> input_grad) const {
  const int d = cfg_.dims;
  const int f = cfg_.features_per_level;
  if (static_cast<int>(input.size()) != d ||
      static_cast<int>(upstream.size()) != output_dim())
    throw Error(ErrorCode::kDimension, "encoder backward size mismatch");
  if (table_grads.size() != tables_.size())
    throw Error(ErrorCode::kDimension, "table gradient buffer size mismatch");
  const bool want_input_grad = !input_grad.empty();
  if (want_input_grad && static_cast<int>(input_grad.size()) != d)
    throw Error(ErrorCode::kDimension, "input gradient size mismatch");

  double unit[kMaxDims];
  bool axis_clamped[kMaxDims];
  for (int k = 0; k < d; ++k) {
    double v = input[k];
    axis_clamped[k] = v < cfg_.box_lo[k] || v > cfg_.box_hi[k];
    v = std::clamp(v, cfg_.box_lo[k], cfg_.box_hi[k]);
    unit[k] = (v - cfg_.box_lo[k]) / (cfg_.box_hi[k] - cfg_.box_lo[k]);
  }
  if (want_input_grad) std::fill(input_grad.begin(), input_grad.end(), 0.0);

  const int corners = 1 << d;
  std::int64_t base[kMaxDims];
  double frac[kMaxDims];
  std::int64_t coord[kMaxDims];

  for (int l = 0; l < cfg_.levels; ++l) {
    const double r = resolution(l);
    for (int k = 0; k < d; ++k) {
      const double x = unit[k] * r;
      base[k] = static_cast<std::int64_t>(std::floor(x));
      frac[k] = x - static_cast<double>(base[k]);
    }
    const double* level_up = upstream.data() + static_cast<std::size_t>(l) * f;
    const double* level_table =
        tables_.data() + static_cast<std::size_t>(l) * table_size() * f;
    double* level_tgrad =
        table_grads.data() + static_cast<std::size_t>(l) * table_size() * f;

    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      for (int k = 0; k < d; ++k)
        w *= ((c >> k) & 1) ? frac[k] : 1.0 - frac[k];

      for (int k = 0; k < d; ++k)
        coord[k] = base[k] + (((c >> k) & 1) ? 1 : 0);
      const std::uint32_t idx = hash_index({coord, static_cast<std::size_t>(d)});

      double* grow = level_tgrad + static_cast<std::size_t>(idx) * f;
      for (int j = 0; j < f; ++j) grow[j] += w * level_up[j];

      if (!want_input_grad) continue;
      const double* row = level_table + static_cast<std::size_t>(idx) * f;
      double up_dot_row = 0.0;
      for (int j = 0; j < f; ++j) up_dot_row += level_up[j] * row[j];
      for (int k = 0; k < d; ++k) {
        if (axis_clamped[k]) continue;
        double dw = ((c >> k) & 1) ? 1.0 : -1.0;
        for (int m = 0; m < d; ++m) {
          if (m == k) continue;
          dw *= ((c >> m) & 1) ? frac[m] : 1.0 - frac[m];
        }
        // d frac / d input = r / box extent
        input_grad[k] += up_dot_row * dw * r /
                         (cfg_.box_hi[k] - cfg_.box_lo[k]);
      }
    }
  }
}

}  // namespace ugs
