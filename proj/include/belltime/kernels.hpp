#pragma once

// Data-parallel inner loops of the simulator.
//
// Each kernel has a scalar reference implementation and, where the build and
// the CPU allow it, an AVX2 variant. The variant is picked once at runtime
// (cpuid, overridable through the BELLTIME_SIMD environment variable) and all
// variants produce bit-identical output: the kernels only do integer
// arithmetic, exact int->double conversions and comparisons.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace belltime::kernels {

enum class SimdLevel : int { kScalar = 0, kAvx2 = 1 };

std::string_view to_string(SimdLevel level) noexcept;
std::optional<SimdLevel> parse_simd_level(std::string_view name) noexcept;

bool is_supported(SimdLevel level) noexcept;

// Best level supported by both the build and the running CPU.
SimdLevel detected_level() noexcept;

// detected_level(), unless BELLTIME_SIMD names a supported level.
SimdLevel active_level();

inline constexpr std::size_t kMaxContexts = 4;

// Per-context branching probabilities of a two-stage sampler: the first
// outcome is +1 iff u1 < first_plus[c]; the second is +1 iff u2 is below
// second_plus_after_plus[c] or second_plus_after_minus[c], depending on
// the first outcome.
struct TwoStageTable {
  std::array<double, kMaxContexts> first_plus{};
  std::array<double, kMaxContexts> second_plus_after_plus{};
  std::array<double, kMaxContexts> second_plus_after_minus{};
};

struct BitStats {
  std::uint64_t ones = 0;
  // Number of positions i with bits[i] != bits[i + 1].
  std::uint64_t transitions = 0;

  friend bool operator==(const BitStats&, const BitStats&) = default;
};

struct KernelTable {
  SimdLevel level;

  // u1[i], u2[i] are the first two variates of the stream of trial
  // first_trial + i (see derive_trial_randomness in selector.hpp).
  // stream_key is mix64(outcome_seed). u1 and u2 must have equal sizes.
  void (*trial_uniforms)(std::uint64_t stream_key, std::uint64_t first_trial,
                         std::span<double> u1, std::span<double> u2);

  // Context indices must be < kMaxContexts.
  void (*two_stage_outcomes)(std::span<const std::uint8_t> contexts,
                             std::span<const double> u1,
                             std::span<const double> u2,
                             const TwoStageTable& table,
                             std::span<std::int8_t> s1,
                             std::span<std::int8_t> s2);

  // Adds sum(s1*s2) and the trial count of each context into product_sums
  // and counts (both sized kMaxContexts). Context indices must be
  // < kMaxContexts.
  void (*accumulate_products)(std::span<const std::uint8_t> contexts,
                              std::span<const std::int8_t> s1,
                              std::span<const std::int8_t> s2,
                              std::span<std::int64_t> product_sums,
                              std::span<std::int64_t> counts);

  // bits holds one 0/1 value per byte.
  BitStats (*bit_stats)(std::span<const std::uint8_t> bits);
};

// Throws UnsupportedOperationError if the level is not available.
const KernelTable& kernels(SimdLevel level);

inline const KernelTable& kernels() { return kernels(active_level()); }

namespace detail {
const KernelTable& scalar_kernels() noexcept;
#if defined(BELLTIME_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
}  // namespace detail

}  // namespace belltime::kernels
