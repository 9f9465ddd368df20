#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace geowalk {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based substream derivation: replica `k` of a run with master seed
/// `s` draws from derive_seed(s, k). Nesting is allowed, e.g.
/// derive_seed(derive_seed(s, k), tag).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(mix64(master) ^ mix64(stream ^ 0x632be59bd9b4e019ULL));
}

/// Stream tags keep independent uses of one replica seed apart.
namespace stream {
inline constexpr std::uint64_t kParents = 1;
inline constexpr std::uint64_t kDaughters = 2;
inline constexpr std::uint64_t kMarks = 3;
inline constexpr std::uint64_t kPoints = 4;
inline constexpr std::uint64_t kWalk = 5;
inline constexpr std::uint64_t kReplica = 6;
}  // namespace stream

/// Thin wrapper over std::mt19937_64 with distribution code that is
/// bit-reproducible across standard libraries (std:: distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the result unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Poisson variate. Multiplication method for small means, PTRS
  /// transformed rejection (Hoermann 1993) otherwise.
  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 10.0) {
      const double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -mean + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace geowalk
