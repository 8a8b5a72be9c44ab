#pragma once

#include <cstdint>

namespace belltime {

// SplitMix64 constants. Every stream in the library (the pair selector and
// the per-trial outcome variates) is built on this recurrence so that runs
// are bit-reproducible across platforms and implementations.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kMixMul1 = 0xBF58476D1CE4E5B9ULL;
inline constexpr std::uint64_t kMixMul2 = 0x94D049BB133111EBULL;

// Avalanche finalizer of SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * kMixMul1;
  z = (z ^ (z >> 27)) * kMixMul2;
  return z ^ (z >> 31);
}

constexpr std::uint64_t splitmix_next(std::uint64_t& state) noexcept {
  state += kGoldenGamma;
  return mix64(state);
}

// Top 53 bits scaled into [0, 1). Exact: every result is k * 2^-53.
constexpr double to_unit_interval(std::uint64_t z) noexcept {
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace belltime
