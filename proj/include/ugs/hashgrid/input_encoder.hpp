#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "ugs/hashgrid/hash_encoder.hpp"

namespace ugs {

/// Level counts allocated to the four input slots (position, scale,
/// rotation, view direction). A zero entry means the raw values pass
/// through unencoded. Default: positions only, 6 levels.
struct EncodingConfig {
  int position_levels = 6;
  int scale_levels = 0;
  int rotation_levels = 0;
  int view_levels = 0;
  int features_per_level = 4;
  int base_resolution = 16;
  int finest_resolution = 512;
  int log2_table_size = 14;
};

/// Assembles the uncertainty-net input row [enc(P), V, R, S] where each slot
/// is either hash-grid encoded or passed through raw:
///   - positions use the scene bounding box as domain;
///   - scales (exp of the stored logs) use [0, max_scale]^3;
///   - rotations are unit quaternions, each component mapped from [-1,1];
///   - view directions are unit vectors, each component mapped from [-1,1].
class InputEncoder {
 public:
  InputEncoder(const EncodingConfig& config, const Eigen::Vector3d& box_lo,
               const Eigen::Vector3d& box_hi, double max_scale);

  const EncodingConfig& config() const { return cfg_; }
  int output_dim() const { return output_dim_; }

  struct SlotGrads {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d view = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = Eigen::Vector4d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Zero();
  };

  /// Per-grid gradient buffers, same layout as the grids' tables.
  struct TableGrads {
    std::vector<std::vector<double>> by_grid;
    void add_scaled(const TableGrads& other, double factor);
  };
  TableGrads zero_table_grads() const;

  void assemble(const Eigen::Vector3d& position, const Eigen::Vector3d& view,
                const Eigen::Vector4d& rotation, const Eigen::Vector3d& scale,
                std::span<double> out) const;

  void backward(const Eigen::Vector3d& position, const Eigen::Vector3d& view,
                const Eigen::Vector4d& rotation, const Eigen::Vector3d& scale,
                std::span<const double> upstream, TableGrads& table_grads,
                SlotGrads& slot_grads) const;

  /// Grids in a stable order for optimisation and serialization; entries may
  /// be null when a slot passes through raw. Order: position, view,
  /// rotation, scale.
  std::vector<HashGridEncoder*> grids();
  std::vector<const HashGridEncoder*> grids() const;
  static const char* grid_name(int slot);

  void randomize_tables(std::uint64_t seed, double scale = 1e-4);
  std::uint64_t clamp_events() const;

 private:
  EncodingConfig cfg_;
  std::unique_ptr<HashGridEncoder> grid_p_, grid_v_, grid_r_, grid_s_;
  int output_dim_ = 0;
};

}  // namespace ugs
