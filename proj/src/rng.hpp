#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace dil {

// Deterministic random stream: std::mt19937_64 (whose output sequence is fixed
// by the C++ standard) with hand-written conversions, so that draws do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, k). k must be positive.
  std::size_t uniform_index(std::size_t k) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(k));
    return i < k ? i : k - 1;
  }

  // Inverse-CDF draw from an unnormalized-safe probability row: one uniform
  // draw, left-to-right cumulative scan. Zero-weight entries are never chosen.
  std::size_t sample(std::span<const double> weights);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; used to derive independent job seeds.
std::uint64_t mix64(std::uint64_t x);

// Child seed for job (tag, index) of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index);

}  // namespace dil
