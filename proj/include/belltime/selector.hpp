#pragma once

// The pair-selection device: a deterministic pseudorandom program that, from
// its seed, chooses which pair of measurement slots each trial uses. It is
// seeded independently of everything that produces outcomes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "belltime/splitmix.hpp"

namespace belltime {

// Temporal: one particle, slots t1, t2, t3 bound to directions a, b, c;
// contexts AB, AC, BC.
// Chsh: a pair of particles, slots a, a', b, b'; contexts AB, AB', A'B, A'B'.
enum class ExperimentKind { kTemporal, kChsh };

std::string_view to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) noexcept;

constexpr std::size_t context_count(ExperimentKind kind) noexcept {
  return kind == ExperimentKind::kTemporal ? 3 : 4;
}
constexpr std::size_t slot_count(ExperimentKind kind) noexcept {
  return kind == ExperimentKind::kTemporal ? 3 : 4;
}

std::string_view slot_label(ExperimentKind kind, std::size_t slot);

struct MeasurementContext {
  ExperimentKind kind;
  std::uint8_t index;

  std::string_view tag() const;
  // Slot indices of the first and second measurement.
  std::pair<std::size_t, std::size_t> slots() const;

  static std::optional<MeasurementContext> from_tag(ExperimentKind kind,
                                                    std::string_view tag) noexcept;

  friend bool operator==(const MeasurementContext&, const MeasurementContext&) = default;
};

struct SelectorState {
  std::uint64_t generator = 0;  // starts at the seed
  std::uint64_t counter = 0;    // contexts emitted so far

  static SelectorState seeded(std::uint64_t seed) noexcept { return {seed, 0}; }
  friend bool operator==(const SelectorState&, const SelectorState&) = default;
};

// Uniform index in [0, n) from a SplitMix64 stream, rejecting draws at or
// above n * floor(2^64 / n).
std::uint8_t draw_index(std::uint64_t& generator, std::size_t n) noexcept;

// (accepts_everything, limit) with limit = n * floor(2^64 / n). When n
// divides 2^64 the limit does not fit in 64 bits and every draw is accepted.
std::pair<bool, std::uint64_t> rejection_limit(std::size_t n) noexcept;

std::pair<MeasurementContext, SelectorState> next_context(SelectorState state,
                                                          ExperimentKind kind) noexcept;

// The first n context indices emitted from `seed`.
std::vector<std::uint8_t> generate_contexts(std::uint64_t seed, ExperimentKind kind,
                                            std::size_t n);

// Counter-based stream of uniform variates for one trial. Streams for
// different trial indices are independent, so trials can be evaluated in
// any order or in parallel.
class TrialStream {
 public:
  TrialStream(std::uint64_t master_seed, std::uint64_t trial_index) noexcept
      : state_(mix64(stream_key(master_seed) ^ trial_index)) {}

  // mix64(master_seed): the per-run key the kernels consume.
  static constexpr std::uint64_t stream_key(std::uint64_t master_seed) noexcept {
    return mix64(master_seed);
  }

  double next_uniform() noexcept { return to_unit_interval(splitmix_next(state_)); }

 private:
  std::uint64_t state_;
};

inline TrialStream derive_trial_randomness(std::uint64_t master_seed,
                                           std::uint64_t trial_index) noexcept {
  return TrialStream(master_seed, trial_index);
}

}  // namespace belltime
