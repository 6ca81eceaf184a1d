#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ugs {

/// Adam with per-group state. beta = (0.9, 0.999), eps = 1e-15.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  std::size_t size() const { return m_.size(); }
  std::int64_t steps() const { return t_; }

  void step(std::span<double> params, std::span<const double> grads,
            double lr);

  /// Drops the moment rows of removed Gaussians; `row_width` is the number
  /// of scalars per Gaussian in this group.
  void remove_rows(const std::vector<std::size_t>& sorted_indices,
                   int row_width);

  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-15;

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

}  // namespace ugs
