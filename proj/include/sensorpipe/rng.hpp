#pragma once

// Deterministic, platform-independent pseudo-random primitives.
//
// Everything random in the toolkit derives from SplitMix64 (Steele, Lea &
// Flood 2014), either as a counter-based hash (value = mix(key, index)) or as
// a sequential stream. Real-valued draws use the top 53 bits, so outputs are
// identical on every conforming platform. std:: distributions are avoided
// because their algorithms are implementation-defined.

#include <cstdint>

namespace sensorpipe::rng {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based hash: one independent stream per (seed, stream), indexed by
// an arbitrary 64-bit counter.
constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t key = mix64(seed + kGolden * (stream + 1));
  return mix64(key + kGolden * (index + 1));
}

// Uniform double in [0, 1).
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  constexpr double uniform() { return to_unit(next()); }
  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Uses rejection to avoid modulo bias.
  constexpr std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace sensorpipe::rng
