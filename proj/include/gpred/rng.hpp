#pragma once

// Deterministic random number generation with explicit stream derivation.
//
// Every random quantity in this library comes from an Rng obtained through
// substream(seed, domain, index): the master seed is mixed with a domain tag
// and a stream index through the SplitMix64 finalizer, and the mixed words
// seed an xoshiro256++ state. A stream's output depends only on
// (seed, domain, index), never on the order in which streams are created or
// consumed, so generation can be parallelized across markers or individuals
// and sweeps can be permuted without changing what any one stream produces.
//
// Distributions are implemented here rather than taken from <random> because
// libstdc++/libc++ distribution algorithms differ; goldens written by one
// build must reread identically everywhere.

#include <cmath>
#include <cstdint>

namespace gpred {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna), seeded via SplitMix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double uniform01() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (1.0 - uniform01());
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang for shape >= 1, boosted below 1.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = uniform01();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
    }
  }

  double chi2(double df) { return gamma(0.5 * df, 2.0); }

  // Scaled inverse chi-square(r, s): the law of r*s/X with X ~ chi2(r).
  double scaled_inv_chi2(double df, double scale) { return df * scale / chi2(df); }

  // Count of successes in two Bernoulli(p) trials; consumes two uniforms.
  int binomial2(double p) {
    int k = 0;
    if (uniform01() <= p) ++k;
    if (uniform01() <= p) ++k;
    return k;
  }

  bool bernoulli(double p) { return uniform01() <= p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

// Stream domains; values are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t kGenotypeColumn = 1;
inline constexpr std::uint64_t kEffects = 2;
inline constexpr std::uint64_t kResidual = 3;
inline constexpr std::uint64_t kFixedDesign = 4;
inline constexpr std::uint64_t kSireEffects = 5;
inline constexpr std::uint64_t kMarkerScan = 6;
inline constexpr std::uint64_t kChain = 7;
inline constexpr std::uint64_t kLocus = 8;
inline constexpr std::uint64_t kVariance = 9;
inline constexpr std::uint64_t kFixedEffects = 10;
inline constexpr std::uint64_t kFolds = 11;
inline constexpr std::uint64_t kReplicate = 12;
}  // namespace stream

inline Rng substream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  std::uint64_t sm = seed;
  std::uint64_t a = splitmix64_next(sm);
  sm = a ^ (domain * 0x9E3779B97F4A7C15ull);
  std::uint64_t b = splitmix64_next(sm);
  sm = b ^ (index * 0xBF58476D1CE4E5B9ull);
  return Rng(splitmix64_next(sm));
}

// Chains derive a second-level seed so their locus streams stay disjoint.
inline std::uint64_t chain_seed(std::uint64_t seed, std::uint64_t chain_index) {
  std::uint64_t sm = seed ^ (chain_index * 0x94D049BB133111EBull);
  splitmix64_next(sm);
  return splitmix64_next(sm);
}

}  // namespace gpred
