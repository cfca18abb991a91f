#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>

namespace plumerom {

/// SplitMix64 finalizer. Used as a counter-based generator: the value for
/// counter i under key k is mix64(k ^ (i * golden)), independent of call order.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) for (key, counter).
inline double counter_uniform(std::uint64_t key, std::uint64_t counter) {
  const std::uint64_t bits = mix64(key ^ mix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Order-dependent combination of 64-bit words into a seed.
inline std::uint64_t combine_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = mix64(h ^ w);
  return h;
}

inline std::uint64_t double_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace plumerom
