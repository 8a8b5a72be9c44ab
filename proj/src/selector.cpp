#include "belltime/selector.hpp"

#include <array>
#include <limits>
#include <string>

#include "belltime/errors.hpp"

namespace belltime {
namespace {

constexpr std::array<std::string_view, 3> kTemporalTags{"AB", "AC", "BC"};
constexpr std::array<std::string_view, 4> kChshTags{"AB", "AB'", "A'B", "A'B'"};
constexpr std::array<std::string_view, 3> kTemporalSlots{"t1", "t2", "t3"};
constexpr std::array<std::string_view, 4> kChshSlots{"a", "a'", "b", "b'"};

constexpr std::array<std::pair<std::size_t, std::size_t>, 3> kTemporalPairs{
    {{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<std::pair<std::size_t, std::size_t>, 4> kChshPairs{
    {{0, 2}, {0, 3}, {1, 2}, {1, 3}}};

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  return kind == ExperimentKind::kTemporal ? "temporal" : "chsh";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) noexcept {
  if (name == "temporal") return ExperimentKind::kTemporal;
  if (name == "chsh") return ExperimentKind::kChsh;
  return std::nullopt;
}

std::string_view slot_label(ExperimentKind kind, std::size_t slot) {
  if (slot >= slot_count(kind)) {
    throw ValidationError("slot index " + std::to_string(slot) + " out of range");
  }
  return kind == ExperimentKind::kTemporal ? kTemporalSlots[slot] : kChshSlots[slot];
}

std::string_view MeasurementContext::tag() const {
  if (index >= context_count(kind)) {
    throw ValidationError("context index " + std::to_string(index) + " out of range");
  }
  return kind == ExperimentKind::kTemporal ? kTemporalTags[index] : kChshTags[index];
}

std::pair<std::size_t, std::size_t> MeasurementContext::slots() const {
  if (index >= context_count(kind)) {
    throw ValidationError("context index " + std::to_string(index) + " out of range");
  }
  return kind == ExperimentKind::kTemporal ? kTemporalPairs[index] : kChshPairs[index];
}

std::optional<MeasurementContext> MeasurementContext::from_tag(ExperimentKind kind,
                                                               std::string_view tag) noexcept {
  const std::size_t n = context_count(kind);
  for (std::size_t i = 0; i < n; ++i) {
    const auto candidate =
        kind == ExperimentKind::kTemporal ? kTemporalTags[i] : kChshTags[i];
    if (candidate == tag) return MeasurementContext{kind, static_cast<std::uint8_t>(i)};
  }
  return std::nullopt;
}

std::pair<bool, std::uint64_t> rejection_limit(std::size_t n) noexcept {
  // 2^64 mod n, computed without 128-bit arithmetic.
  const std::uint64_t remainder = (0 - static_cast<std::uint64_t>(n)) % n;
  if (remainder == 0) return {true, 0};
  return {false, 0 - remainder};  // 2^64 - remainder = n * floor(2^64 / n)
}

std::uint8_t draw_index(std::uint64_t& generator, std::size_t n) noexcept {
  const auto [accept_all, limit] = rejection_limit(n);
  for (;;) {
    const std::uint64_t z = splitmix_next(generator);
    if (accept_all || z < limit) return static_cast<std::uint8_t>(z % n);
  }
}

std::pair<MeasurementContext, SelectorState> next_context(SelectorState state,
                                                          ExperimentKind kind) noexcept {
  const std::uint8_t index = draw_index(state.generator, context_count(kind));
  state.counter += 1;
  return {MeasurementContext{kind, index}, state};
}

std::vector<std::uint8_t> generate_contexts(std::uint64_t seed, ExperimentKind kind,
                                            std::size_t n) {
  std::vector<std::uint8_t> out(n);
  std::uint64_t generator = seed;
  const std::size_t k = context_count(kind);
  for (auto& c : out) c = draw_index(generator, k);
  return out;
}

}  // namespace belltime
