// AVX2 variants of the kernels in kernels_scalar.cpp. Functions carry a
// target attribute instead of the whole file being built with -mavx2, so no
// AVX2 code leaks into inline functions shared with the scalar path.

#include "belltime/kernels.hpp"

#if defined(BELLTIME_HAVE_AVX2)

#include <immintrin.h>

#include <cstring>

#include "belltime/splitmix.hpp"

#define BELLTIME_AVX2 __attribute__((target("avx2")))

namespace belltime::kernels {
namespace {

// a * b mod 2^64, lane-wise. AVX2 has no 64-bit low multiply.
BELLTIME_AVX2 inline __m256i mullo_epi64(__m256i a, __m256i b) {
  const __m256i lo = _mm256_mul_epu32(a, b);
  const __m256i a_hi_b = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b);
  const __m256i a_b_hi = _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32));
  const __m256i cross = _mm256_slli_epi64(_mm256_add_epi64(a_hi_b, a_b_hi), 32);
  return _mm256_add_epi64(lo, cross);
}

BELLTIME_AVX2 inline __m256i mix64_v(__m256i z) {
  const __m256i m1 = _mm256_set1_epi64x(static_cast<long long>(kMixMul1));
  const __m256i m2 = _mm256_set1_epi64x(static_cast<long long>(kMixMul2));
  z = mullo_epi64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 30)), m1);
  z = mullo_epi64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 27)), m2);
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

// Exact conversion of the top 53 bits to a double in [0, 1).
BELLTIME_AVX2 inline __m256d to_unit_v(__m256i z) {
  const __m256i x = _mm256_srli_epi64(z, 11);
  const __m256i two52_bits = _mm256_set1_epi64x(0x4330000000000000LL);
  const __m256d two52 = _mm256_castsi256_pd(two52_bits);
  const __m256i hi = _mm256_srli_epi64(x, 32);
  const __m256i lo = _mm256_and_si256(x, _mm256_set1_epi64x(0xFFFFFFFFLL));
  const __m256d hi_d =
      _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(hi, two52_bits)), two52);
  const __m256d lo_d =
      _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(lo, two52_bits)), two52);
  const __m256d value = _mm256_add_pd(_mm256_mul_pd(hi_d, _mm256_set1_pd(0x1.0p32)), lo_d);
  return _mm256_mul_pd(value, _mm256_set1_pd(0x1.0p-53));
}

BELLTIME_AVX2 void trial_uniforms_avx2(std::uint64_t stream_key,
                                       std::uint64_t first_trial,
                                       std::span<double> u1,
                                       std::span<double> u2) {
  const std::size_t n = u1.size();
  const __m256i key = _mm256_set1_epi64x(static_cast<long long>(stream_key));
  const __m256i gamma = _mm256_set1_epi64x(static_cast<long long>(kGoldenGamma));
  const __m256i lane = _mm256_set_epi64x(3, 2, 1, 0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i index = _mm256_add_epi64(
        _mm256_set1_epi64x(static_cast<long long>(first_trial + i)), lane);
    __m256i state = mix64_v(_mm256_xor_si256(key, index));
    state = _mm256_add_epi64(state, gamma);
    _mm256_storeu_pd(u1.data() + i, to_unit_v(mix64_v(state)));
    state = _mm256_add_epi64(state, gamma);
    _mm256_storeu_pd(u2.data() + i, to_unit_v(mix64_v(state)));
  }
  for (; i < n; ++i) {
    std::uint64_t state = mix64(stream_key ^ (first_trial + i));
    u1[i] = to_unit_interval(splitmix_next(state));
    u2[i] = to_unit_interval(splitmix_next(state));
  }
}

BELLTIME_AVX2 void two_stage_outcomes_avx2(std::span<const std::uint8_t> contexts,
                                           std::span<const double> u1,
                                           std::span<const double> u2,
                                           const TwoStageTable& table,
                                           std::span<std::int8_t> s1,
                                           std::span<std::int8_t> s2) {
  const std::size_t n = contexts.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::int32_t packed;
    std::memcpy(&packed, contexts.data() + i, sizeof(packed));
    const __m128i index = _mm_cvtepu8_epi32(_mm_cvtsi32_si128(packed));
    const __m256d p1 = _mm256_i32gather_pd(table.first_plus.data(), index, 8);
    const __m256d after_plus =
        _mm256_i32gather_pd(table.second_plus_after_plus.data(), index, 8);
    const __m256d after_minus =
        _mm256_i32gather_pd(table.second_plus_after_minus.data(), index, 8);
    const __m256d first_up =
        _mm256_cmp_pd(_mm256_loadu_pd(u1.data() + i), p1, _CMP_LT_OQ);
    const __m256d p2 = _mm256_blendv_pd(after_minus, after_plus, first_up);
    const __m256d second_up =
        _mm256_cmp_pd(_mm256_loadu_pd(u2.data() + i), p2, _CMP_LT_OQ);
    const int bits1 = _mm256_movemask_pd(first_up);
    const int bits2 = _mm256_movemask_pd(second_up);
    for (int k = 0; k < 4; ++k) {
      s1[i + k] = ((bits1 >> k) & 1) ? 1 : -1;
      s2[i + k] = ((bits2 >> k) & 1) ? 1 : -1;
    }
  }
  for (; i < n; ++i) {
    const std::size_t c = contexts[i];
    const bool first_up = u1[i] < table.first_plus[c];
    const double p2 = first_up ? table.second_plus_after_plus[c]
                               : table.second_plus_after_minus[c];
    s1[i] = first_up ? 1 : -1;
    s2[i] = u2[i] < p2 ? 1 : -1;
  }
}

BELLTIME_AVX2 void accumulate_products_avx2(std::span<const std::uint8_t> contexts,
                                            std::span<const std::int8_t> s1,
                                            std::span<const std::int8_t> s2,
                                            std::span<std::int64_t> product_sums,
                                            std::span<std::int64_t> counts) {
  const std::size_t n = contexts.size();
  std::array<std::int64_t, kMaxContexts> positive{};
  std::array<std::int64_t, kMaxContexts> matched{};
  const __m256i one = _mm256_set1_epi8(1);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i ctx = _mm256_loadu_si256(
        reinterpret_cast<const __m256i*>(contexts.data() + i));
    const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(s1.data() + i));
    const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(s2.data() + i));
    // For +-1 operands sign(a, b) == a * b.
    const __m256i is_positive = _mm256_cmpeq_epi8(_mm256_sign_epi8(a, b), one);
    for (std::size_t c = 0; c < kMaxContexts; ++c) {
      const __m256i in_context =
          _mm256_cmpeq_epi8(ctx, _mm256_set1_epi8(static_cast<char>(c)));
      const auto mask = static_cast<std::uint32_t>(_mm256_movemask_epi8(in_context));
      const auto pos = static_cast<std::uint32_t>(
          _mm256_movemask_epi8(_mm256_and_si256(in_context, is_positive)));
      matched[c] += __builtin_popcount(mask);
      positive[c] += __builtin_popcount(pos);
    }
  }
  for (std::size_t c = 0; c < kMaxContexts; ++c) {
    product_sums[c] += 2 * positive[c] - matched[c];
    counts[c] += matched[c];
  }
  for (; i < n; ++i) {
    const std::size_t c = contexts[i];
    product_sums[c] += s1[i] * s2[i];
    counts[c] += 1;
  }
}

BELLTIME_AVX2 BitStats bit_stats_avx2(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  const __m256i zero = _mm256_setzero_si256();
  __m256i ones_acc = zero;
  __m256i transitions_acc = zero;
  std::size_t i = 0;
  // Needs bits[i + 32] for the last transition of the block.
  for (; i + 33 <= n; i += 32) {
    const __m256i cur = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits.data() + i));
    const __m256i next =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits.data() + i + 1));
    ones_acc = _mm256_add_epi64(ones_acc, _mm256_sad_epu8(cur, zero));
    transitions_acc = _mm256_add_epi64(
        transitions_acc, _mm256_sad_epu8(_mm256_xor_si256(cur, next), zero));
  }
  alignas(32) std::uint64_t lanes[4];
  BitStats stats;
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), ones_acc);
  stats.ones = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), transitions_acc);
  stats.transitions = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) {
    stats.ones += bits[i];
    if (i + 1 < n && bits[i] != bits[i + 1]) ++stats.transitions;
  }
  return stats;
}

}  // namespace

namespace detail {

const KernelTable& avx2_kernels() noexcept {
  static const KernelTable table{
      SimdLevel::kAvx2,
      &trial_uniforms_avx2,
      &two_stage_outcomes_avx2,
      &accumulate_products_avx2,
      &bit_stats_avx2,
  };
  return table;
}

}  // namespace detail
}  // namespace belltime::kernels

#endif  // BELLTIME_HAVE_AVX2
