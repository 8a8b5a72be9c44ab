#include "belltime/kernels.hpp"
#include "belltime/splitmix.hpp"

namespace belltime::kernels {
namespace {

void trial_uniforms_scalar(std::uint64_t stream_key, std::uint64_t first_trial,
                           std::span<double> u1, std::span<double> u2) {
  const std::size_t n = u1.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t state = mix64(stream_key ^ (first_trial + i));
    u1[i] = to_unit_interval(splitmix_next(state));
    u2[i] = to_unit_interval(splitmix_next(state));
  }
}

void two_stage_outcomes_scalar(std::span<const std::uint8_t> contexts,
                               std::span<const double> u1,
                               std::span<const double> u2,
                               const TwoStageTable& table,
                               std::span<std::int8_t> s1,
                               std::span<std::int8_t> s2) {
  const std::size_t n = contexts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = contexts[i];
    const bool first_up = u1[i] < table.first_plus[c];
    const double p2 = first_up ? table.second_plus_after_plus[c]
                               : table.second_plus_after_minus[c];
    s1[i] = first_up ? 1 : -1;
    s2[i] = u2[i] < p2 ? 1 : -1;
  }
}

void accumulate_products_scalar(std::span<const std::uint8_t> contexts,
                                std::span<const std::int8_t> s1,
                                std::span<const std::int8_t> s2,
                                std::span<std::int64_t> product_sums,
                                std::span<std::int64_t> counts) {
  const std::size_t n = contexts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = contexts[i];
    product_sums[c] += s1[i] * s2[i];
    counts[c] += 1;
  }
}

BitStats bit_stats_scalar(std::span<const std::uint8_t> bits) {
  BitStats stats;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    stats.ones += bits[i];
    if (i + 1 < bits.size() && bits[i] != bits[i + 1]) ++stats.transitions;
  }
  return stats;
}

}  // namespace

namespace detail {

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{
      SimdLevel::kScalar,
      &trial_uniforms_scalar,
      &two_stage_outcomes_scalar,
      &accumulate_products_scalar,
      &bit_stats_scalar,
  };
  return table;
}

}  // namespace detail
}  // namespace belltime::kernels
