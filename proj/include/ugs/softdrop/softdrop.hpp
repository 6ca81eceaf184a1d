#pragma once

#include <cstdint>

#include "ugs/core/rng.hpp"

namespace ugs {

/// Evaluation-time behaviour of the dropout mechanism. Training always
/// samples q; evaluation defaults to the deterministic q = 1/2 slice so
/// metrics are reproducible.
enum class EvalMode { kStochastic, kDeterministicQHalf, kOff };

struct SoftDropConfig {
  double temperature = 0.1;  // tau > 0
  double clamp_min = 0.2;
  double clamp_max = 0.8;
  EvalMode eval_mode = EvalMode::kDeterministicQHalf;

  void validate() const;
};

/// One per-Gaussian dropout evaluation: the uniform draw, the raw weight and
/// its clamped value.
struct DropSample {
  double q = 0.5;
  double omega = 0.5;
  double omega_clamped = 0.5;
};

// u and q are pushed this far inside (0,1) before taking logits.
inline constexpr double kLogitGuard = 1e-6;

/// Uncertainty-modulated opacity alpha * (1 - u). Both inputs must lie in
/// the open interval (0,1).
double modulate_opacity(double alpha, double u);

/// Concrete-relaxation drop weight:
///   omega = 1 - sigmoid((1/tau) * (logit(u) + logit(q))).
/// Strictly decreasing in both u and q; equals 1/2 at u = q = 1/2.
double soft_drop_weight(double u, double q, double tau);

/// Clamps omega into [clamp_min, clamp_max].
double clamp_weight(double omega, const SoftDropConfig& config);

/// Final blended opacity: modulated alpha times the clamped drop weight.
double effective_opacity(double alpha_mod, double omega_clamped);

/// The q draw for (iteration, gaussian) under a fixed seed. Counter-based:
/// reproducible and independent of evaluation order; endpoints are rejected.
double sample_q(const CounterRng& rng, std::uint64_t iteration,
                std::uint64_t gaussian_index);

/// Forward pass of the whole chain (Eq. modulate -> drop -> clamp -> final)
/// with every intermediate retained for the backward pass.
struct SoftDropChain {
  double alpha = 0.0;
  double u = 0.0;
  double q = 0.5;
  double alpha_mod = 0.0;      // alpha * (1-u)
  double omega = 0.5;          // pre-clamp weight
  double omega_clamped = 0.5;
  double effective = 0.0;      // value handed to the rasterizer
};

SoftDropChain soft_drop_forward(double alpha, double u, double q,
                                const SoftDropConfig& config);

/// d(effective)/d(alpha) and d(effective)/d(u) times `upstream`. The clamp
/// uses the hard subgradient: the omega branch vanishes outside the band.
struct SoftDropGrads {
  double d_alpha = 0.0;
  double d_u = 0.0;
};

SoftDropGrads soft_drop_backward(const SoftDropChain& chain,
                                 const SoftDropConfig& config,
                                 double upstream);

}  // namespace ugs
