#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace snnq {

using Rng = std::mt19937;

/// One SplitMix64 step; advances `state` and returns a mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed for stream `index` under `master`. `salt` separates
/// unrelated stream families drawn from the same master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::uint64_t salt = 0) {
  std::uint64_t state = master;
  (void)splitmix64(state);
  state ^= salt * 0xbf58476d1ce4e5b9ULL;
  (void)splitmix64(state);
  state ^= index * 0x94d049bb133111ebULL;
  return splitmix64(state);
}

/// Engine seeded from the full 64-bit value (both halves feed a seed_seq).
inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

/// Uniform double in [0, 1), 32 bits of precision. Portable: does not rely on
/// std::uniform_real_distribution, whose output is implementation-defined.
inline double uniform01(Rng& rng) {
  return std::ldexp(static_cast<double>(rng()), -32);
}

/// Uniform float in [0, 1), 24 bits of precision.
inline float uniform01f(Rng& rng) {
  return std::ldexp(static_cast<float>(rng() >> 8), -24);
}

/// Exactly uniform integer in [0, n), rejection sampled.
inline std::uint32_t uniform_below(Rng& rng, std::uint32_t n) {
  const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
  std::uint32_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Standard normal deviate via Box-Muller. Portable for the same reason as
/// uniform01.
inline double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 == 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  const double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace snnq
