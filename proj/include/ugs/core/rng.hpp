#pragma once

#include <cmath>
#include <cstdint>

namespace ugs {

/// SplitMix64 finalising permutation.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Counter-based RNG: every draw is a pure function of
/// (seed, stream, index, salt), so draws are reproducible bit-for-bit and
/// independent of evaluation order. Streams separate unrelated consumers
/// (dropout q, view selection, initialisation, ...).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t word(std::uint64_t stream, std::uint64_t index,
                     std::uint64_t salt = 0) const {
    std::uint64_t h = mix64(seed_ ^ 0xA0761D6478BD642Full);
    h = mix64(h ^ stream);
    h = mix64(h ^ index);
    h = mix64(h ^ salt);
    return h;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t index,
                 std::uint64_t salt = 0) const {
    return static_cast<double>(word(stream, index, salt) >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1); draws landing on an endpoint are
  /// rejected and redrawn with a bumped salt.
  double uniform_open(std::uint64_t stream, std::uint64_t index,
                      std::uint64_t salt = 0) const {
    for (;;) {
      const double u = uniform(stream, index, salt);
      if (u > 0.0 && u < 1.0) return u;
      salt += 0x6C62272E07BB0142ull;
    }
  }

  /// Standard normal via Box-Muller.
  double normal(std::uint64_t stream, std::uint64_t index,
                std::uint64_t salt = 0) const {
    const double u1 = uniform_open(stream, index, salt);
    const double u2 = uniform(stream, index, salt + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace ugs
