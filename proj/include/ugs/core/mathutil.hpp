#pragma once

#include <algorithm>
#include <cmath>

namespace ugs {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double sigmoid_derivative(double s) { return s * (1.0 - s); }

/// Inverse sigmoid. Callers must pass p in (0,1).
inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace ugs
