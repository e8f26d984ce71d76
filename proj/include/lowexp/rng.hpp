#pragma once

#include <cstdint>
#include <random>

namespace lowexp {

// SplitMix64 finalizer. Used to turn (base seed, index) pairs into
// decorrelated child seeds so replications, grid points and pilot candidates
// each own an independent stream regardless of execution order.
std::uint64_t mix_seed(std::uint64_t state);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

// Seeded generator with explicit draw primitives. All distributions are
// produced by inverse transform from the raw 64-bit output, so a fixed seed
// reproduces the same stream independent of the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0,1), granularity 2^-53.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via inverse CDF (one uniform per draw).
  double normal() { return normal_quantile(uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lowexp
