#pragma once

// Reproducible random number generation. The raw stream is std::mt19937_64
// (bit-exact across platforms by the standard); every distribution on top of
// it is implemented here with fixed arithmetic, so identical seeds give
// identical draws everywhere. Platform-library distributions are not used.

#include "trajseg/core.hpp"
#include "trajseg/mathutil.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace trajseg {

// Mixes a base seed with a stream index (splitmix64 finalizer) so batch
// element i can be generated independently: drawing element i in isolation
// yields the same values as drawing it as part of the batch.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi] (inclusive).
  int uniform_int(int lo, int hi) {
    if (hi < lo)
      throw Error(ErrorCategory::internal, "uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  // Standard normal via Box-Muller; the paired variate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    // Guard against log(0); shifts the draw by an undetectable 2^-53.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Vec2 normal2() {
    double a = normal();
    double b = normal();
    return Vec2(a, b);
  }

  // Draw from N(mean, cov) through the (lower) Cholesky factor of cov.
  Vec2 gaussian2(const Vec2& mean, const Mat2& cov) {
    double l00 = std::sqrt(std::max(cov(0, 0), 0.0));
    double l10 = l00 > 0.0 ? cov(1, 0) / l00 : 0.0;
    double l11 = std::sqrt(std::max(cov(1, 1) - l10 * l10, 0.0));
    Vec2 z = normal2();
    return mean + Vec2(l00 * z(0), l10 * z(0) + l11 * z(1));
  }

  // Poisson via Knuth's product-of-uniforms method; exact and portable for
  // the small rates used here.
  int poisson(double lambda) {
    if (!(lambda > 0.0))
      throw Error(ErrorCategory::numeric, "Poisson rate must be positive");
    double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace trajseg
