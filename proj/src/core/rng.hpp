#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hierlogit {

// All randomness in the toolkit flows through the two generators below.
// Both are fully specified by their state-transition functions, so traces
// are reproducible across platforms and implementations (see README).

// splitmix64 step: advances `state` by the 64-bit golden-ratio increment
// and returns the mixed output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Chain c draws its seed by advancing a splitmix64 stream c+1 steps from
// the master seed, so any chain's stream is recoverable in isolation.
inline std::uint64_t chain_seed(std::uint64_t master_seed, int chain_index) {
  std::uint64_t state = master_seed;
  std::uint64_t out = 0;
  for (int i = 0; i <= chain_index; ++i) out = splitmix64_next(state);
  return out;
}

// xoshiro256++ with splitmix64 seed expansion.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
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

  // Uniform on [0,1): top 53 bits scaled by 2^-53.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; used where log(u) must stay finite.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Integer in [0, n) by rejection-free modulo of the high bits; n is
  // small everywhere we use this, so modulo bias is negligible but we
  // reject anyway to keep the stream exactly uniform.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace hierlogit
