#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

namespace ugs {

/// Multilevel hash-grid encoder: per level, the input is scaled to that
/// level's lattice resolution, the 2^d surrounding corners are hashed into a
/// learnable feature table and multilinearly interpolated. Level outputs are
/// concatenated. Works for 3-D inputs (positions, view directions, scales)
/// and 4-D inputs (quaternions).
class HashGridEncoder {
 public:
  struct Config {
    int dims = 3;
    int levels = 6;
    int features_per_level = 4;
    int base_resolution = 16;
    double growth = 2.0;          // per-level resolution factor, > 1
    int log2_table_size = 14;     // table entries per level (power of two)
    Eigen::VectorXd box_lo;       // domain box, size == dims
    Eigen::VectorXd box_hi;

    /// Growth factor so the finest level reaches `finest` from `base`.
    static double growth_for(int levels, int base, int finest);
  };

  explicit HashGridEncoder(const Config& config);

  const Config& config() const { return cfg_; }
  int input_dim() const { return cfg_.dims; }
  int output_dim() const { return cfg_.levels * cfg_.features_per_level; }
  std::size_t table_size() const { return std::size_t{1} << cfg_.log2_table_size; }
  /// Lattice resolution of level l (0-based): r_base * growth^l.
  double resolution(int level) const;

  /// All feature tables, level-major: [(level * table_size + index) * F + f].
  std::vector<double>& tables() { return tables_; }
  const std::vector<double>& tables() const { return tables_; }
  std::size_t parameter_count() const { return tables_.size(); }

  /// Fills the tables with uniform values in [-scale, scale].
  void randomize_tables(std::uint64_t seed, double scale = 1e-4);

  /// Spatial hash of an integer lattice coordinate into [0, table_size).
  /// Fixed primes (1, 2654435761, 805459861, 3674653429); bit-exact across
  /// platforms. The first three match the reference spatial-hash constants.
  std::uint32_t hash_index(std::span<const std::int64_t> coord) const;

  /// Encodes `input` (clamped into the domain box; clamps are counted) into
  /// `out`, which must have output_dim() entries.
  void encode(std::span<const double> input, std::span<double> out) const;

  /// Accumulates d(loss)/d(tables) into `table_grads` (same layout/size as
  /// tables()) and writes d(loss)/d(input) to `input_grad` when non-empty.
  /// Axes that were clamped in the forward pass receive zero input gradient.
  /// Accumulation is a plain `+=`: concurrent calls on the same buffer must
  /// be serialized by the caller.
  void encode_backward(std::span<const double> input,
                       std::span<const double> upstream,
                       std::span<double> table_grads,
                       std::span<double> input_grad) const;

  std::uint64_t clamp_events() const { return clamp_events_.load(); }

 private:
  Config cfg_;
  std::vector<double> tables_;
  mutable std::atomic<std::uint64_t> clamp_events_{0};
};

}  // namespace ugs
