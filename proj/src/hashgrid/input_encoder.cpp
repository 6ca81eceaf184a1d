#include "ugs/hashgrid/input_encoder.hpp"

#include "ugs/core/error.hpp"
#include "ugs/core/rng.hpp"
#include "ugs/kernels/kernels.hpp"

namespace ugs {

namespace {

HashGridEncoder::Config grid_config(const EncodingConfig& cfg, int levels,
                                    int dims, const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi) {
  HashGridEncoder::Config g;
  g.dims = dims;
  g.levels = levels;
  g.features_per_level = cfg.features_per_level;
  g.base_resolution = cfg.base_resolution;
  g.growth = HashGridEncoder::Config::growth_for(levels, cfg.base_resolution,
                                                 cfg.finest_resolution);
  g.log2_table_size = cfg.log2_table_size;
  g.box_lo = lo;
  g.box_hi = hi;
  return g;
}

Eigen::VectorXd constant_vec(int dims, double v) {
  return Eigen::VectorXd::Constant(dims, v);
}

}  // namespace

void InputEncoder::TableGrads::add_scaled(const TableGrads& other,
                                          double factor) {
  for (std::size_t g = 0; g < by_grid.size(); ++g) {
    const auto& src = other.by_grid[g];
    auto& dst = by_grid[g];
    if (!src.empty())
      kernels::active().axpy(factor, src.data(), dst.data(), dst.size());
  }
}

InputEncoder::InputEncoder(const EncodingConfig& config,
                           const Eigen::Vector3d& box_lo,
                           const Eigen::Vector3d& box_hi, double max_scale)
    : cfg_(config) {
  if (cfg_.position_levels < 0 || cfg_.scale_levels < 0 ||
      cfg_.rotation_levels < 0 || cfg_.view_levels < 0)
    throw Error(ErrorCode::kConfig, "encoding level counts must be >= 0");

  if (cfg_.position_levels > 0)
    grid_p_ = std::make_unique<HashGridEncoder>(
        grid_config(cfg_, cfg_.position_levels, 3, box_lo, box_hi));
  if (cfg_.view_levels > 0)
    grid_v_ = std::make_unique<HashGridEncoder>(grid_config(
        cfg_, cfg_.view_levels, 3, constant_vec(3, -1.0), constant_vec(3, 1.0)));
  if (cfg_.rotation_levels > 0)
    grid_r_ = std::make_unique<HashGridEncoder>(grid_config(
        cfg_, cfg_.rotation_levels, 4, constant_vec(4, -1.0), constant_vec(4, 1.0)));
  if (cfg_.scale_levels > 0)
    grid_s_ = std::make_unique<HashGridEncoder>(
        grid_config(cfg_, cfg_.scale_levels, 3, constant_vec(3, 0.0),
                    constant_vec(3, std::max(max_scale, 1e-6))));

  output_dim_ = (grid_p_ ? grid_p_->output_dim() : 3) +
                (grid_v_ ? grid_v_->output_dim() : 3) +
                (grid_r_ ? grid_r_->output_dim() : 4) +
                (grid_s_ ? grid_s_->output_dim() : 3);
}

InputEncoder::TableGrads InputEncoder::zero_table_grads() const {
  TableGrads g;
  for (const HashGridEncoder* grid :
       const_cast<InputEncoder*>(this)->grids()) {
    g.by_grid.emplace_back();
    if (grid) g.by_grid.back().assign(grid->parameter_count(), 0.0);
  }
  return g;
}

void InputEncoder::assemble(const Eigen::Vector3d& position,
                            const Eigen::Vector3d& view,
                            const Eigen::Vector4d& rotation,
                            const Eigen::Vector3d& scale,
                            std::span<double> out) const {
  if (static_cast<int>(out.size()) != output_dim_)
    throw Error(ErrorCode::kDimension, "input-encoder output size mismatch");
  std::size_t at = 0;
  auto emit = [&](const HashGridEncoder* grid, const double* raw, int raw_dim) {
    if (grid) {
      grid->encode({raw, static_cast<std::size_t>(raw_dim)},
                   out.subspan(at, grid->output_dim()));
      at += grid->output_dim();
    } else {
      for (int k = 0; k < raw_dim; ++k) out[at++] = raw[k];
    }
  };
  emit(grid_p_.get(), position.data(), 3);
  emit(grid_v_.get(), view.data(), 3);
  emit(grid_r_.get(), rotation.data(), 4);
  emit(grid_s_.get(), scale.data(), 3);
}

void InputEncoder::backward(const Eigen::Vector3d& position,
                            const Eigen::Vector3d& view,
                            const Eigen::Vector4d& rotation,
                            const Eigen::Vector3d& scale,
                            std::span<const double> upstream,
                            TableGrads& table_grads,
                            SlotGrads& slot_grads) const {
  if (static_cast<int>(upstream.size()) != output_dim_)
    throw Error(ErrorCode::kDimension, "input-encoder upstream size mismatch");
  if (table_grads.by_grid.size() != 4)
    throw Error(ErrorCode::kDimension, "table gradient buffers missing");

  std::size_t at = 0;
  int grid_index = 0;
  auto absorb = [&](const HashGridEncoder* grid, const double* raw,
                    int raw_dim, double* slot_grad_out) {
    if (grid) {
      grid->encode_backward(
          {raw, static_cast<std::size_t>(raw_dim)},
          upstream.subspan(at, grid->output_dim()),
          {table_grads.by_grid[grid_index].data(),
           table_grads.by_grid[grid_index].size()},
          {slot_grad_out, static_cast<std::size_t>(raw_dim)});
      at += grid->output_dim();
    } else {
      for (int k = 0; k < raw_dim; ++k) slot_grad_out[k] = upstream[at++];
    }
    ++grid_index;
  };
  absorb(grid_p_.get(), position.data(), 3, slot_grads.position.data());
  absorb(grid_v_.get(), view.data(), 3, slot_grads.view.data());
  absorb(grid_r_.get(), rotation.data(), 4, slot_grads.rotation.data());
  absorb(grid_s_.get(), scale.data(), 3, slot_grads.scale.data());
}

std::vector<HashGridEncoder*> InputEncoder::grids() {
  return {grid_p_.get(), grid_v_.get(), grid_r_.get(), grid_s_.get()};
}

std::vector<const HashGridEncoder*> InputEncoder::grids() const {
  return {grid_p_.get(), grid_v_.get(), grid_r_.get(), grid_s_.get()};
}

const char* InputEncoder::grid_name(int slot) {
  static const char* names[4] = {"grid_position", "grid_view",
                                 "grid_rotation", "grid_scale"};
  return names[slot];
}

void InputEncoder::randomize_tables(std::uint64_t seed, double scale) {
  int slot = 0;
  for (HashGridEncoder* grid : grids()) {
    if (grid) grid->randomize_tables(mix64(seed + 0x51ED270 + slot), scale);
    ++slot;
  }
}

std::uint64_t InputEncoder::clamp_events() const {
  std::uint64_t total = 0;
  for (const HashGridEncoder* grid : grids())
    if (grid) total += grid->clamp_events();
  return total;
}

}  // namespace ugs
