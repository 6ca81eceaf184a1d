#include "ugs/softdrop/softdrop.hpp"

#include <algorithm>
#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"

namespace ugs {

namespace {
constexpr std::uint64_t kDropQStream = 0x44524f50u;  // per-Gaussian q draws

double guarded(double v) {
  return std::clamp(v, kLogitGuard, 1.0 - kLogitGuard);
}
}  // namespace

void SoftDropConfig::validate() const {
  if (!(temperature > 0.0))
    throw Error(ErrorCode::kConfig, "softdrop temperature must be positive");
  if (!(0.0 < clamp_min && clamp_min < clamp_max && clamp_max < 1.0))
    throw Error(ErrorCode::kConfig,
                "softdrop clamp bounds must satisfy 0 < min < max < 1");
}

double modulate_opacity(double alpha, double u) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::kDomain, "modulate_opacity: alpha must be in (0,1)");
  if (!(u > 0.0 && u < 1.0))
    throw Error(ErrorCode::kDomain, "modulate_opacity: u must be in (0,1)");
  return alpha * (1.0 - u);
}

double soft_drop_weight(double u, double q, double tau) {
  const double ug = guarded(u);
  const double qg = guarded(q);
  const double s = (logit(ug) + logit(qg)) / tau;
  // 1 - sigmoid(s), computed as sigmoid(-s) so both tails stay accurate.
  return sigmoid(-s);
}

double clamp_weight(double omega, const SoftDropConfig& config) {
  return std::clamp(omega, config.clamp_min, config.clamp_max);
}

double effective_opacity(double alpha_mod, double omega_clamped) {
  return alpha_mod * omega_clamped;
}

double sample_q(const CounterRng& rng, std::uint64_t iteration,
                std::uint64_t gaussian_index) {
  return rng.uniform_open(kDropQStream, iteration, gaussian_index);
}

SoftDropChain soft_drop_forward(double alpha, double u, double q,
                                const SoftDropConfig& config) {
  SoftDropChain c;
  c.alpha = alpha;
  c.u = u;
  c.q = q;
  c.alpha_mod = modulate_opacity(alpha, u);
  c.omega = soft_drop_weight(u, q, config.temperature);
  c.omega_clamped = clamp_weight(c.omega, config);
  c.effective = effective_opacity(c.alpha_mod, c.omega_clamped);
  return c;
}

SoftDropGrads soft_drop_backward(const SoftDropChain& chain,
                                 const SoftDropConfig& config,
                                 double upstream) {
  SoftDropGrads g;
  // effective = alpha*(1-u) * omega_clamped
  g.d_alpha = upstream * (1.0 - chain.u) * chain.omega_clamped;
  double d_u = -upstream * chain.alpha * chain.omega_clamped;

  const bool inside_band =
      chain.omega > config.clamp_min && chain.omega < config.clamp_max;
  const double ug = guarded(chain.u);
  const bool inside_guard = chain.u > kLogitGuard && chain.u < 1.0 - kLogitGuard;
  if (inside_band && inside_guard) {
    // omega = sigmoid(-s); d omega/d s = -omega*(1-omega)
    const double d_omega_ds = -chain.omega * (1.0 - chain.omega);
    const double ds_du = 1.0 / (config.temperature * ug * (1.0 - ug));
    d_u += upstream * chain.alpha_mod * d_omega_ds * ds_du;
  }
  g.d_u = d_u;
  return g;
}

}  // namespace ugs
