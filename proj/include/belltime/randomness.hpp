#pragma once

// Bits extracted from trial outcomes, the frequency (monobit) and runs tests,
// and certification conditional on an observed inequality violation.
//
// Certification is qualitative: no min-entropy bound is computed. It also
// rests on the no-conspiracy assumption, which a contextual backend breaks by
// construction; reports from such backends carry a caveat flag.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "belltime/kernels.hpp"
#include "belltime/protocol.hpp"

namespace belltime {

inline constexpr double kSignificanceLevel = 0.01;
inline constexpr std::size_t kMinimumTestBits = 100;
inline constexpr std::string_view kExtractionRule = "pair-outcomes-v1";

struct BitString {
  // One 0/1 value per element: per trial, bit(s1) then bit(s2), +1 -> 1.
  std::vector<std::uint8_t> bits;
  std::string records_sha256;
  std::string rule{kExtractionRule};

  // ASCII '0'/'1', 64 bits per line, newline-terminated.
  std::string to_text() const;
};

// Throws ValidationError on empty input.
BitString extract_bits(const ExperimentRecords& records);

// p = erfc(|sum(2b - 1)| / sqrt(2n)). Throws ValidationError below
// kMinimumTestBits.
double monobit_test(std::span<const std::uint8_t> bits,
                    kernels::SimdLevel simd = kernels::active_level());

struct RunsResult {
  // False when the ones proportion pi has |pi - 1/2| >= 2/sqrt(n).
  bool applicable = false;
  double p_value = 0.0;  // meaningful only when applicable
  double ones_fraction = 0.0;
  std::uint64_t runs = 0;
};

// V = total runs; p = erfc(|V - 2n pi(1-pi)| / (2 sqrt(2n) pi(1-pi))).
// Throws ValidationError below kMinimumTestBits.
RunsResult runs_test(std::span<const std::uint8_t> bits,
                     kernels::SimdLevel simd = kernels::active_level());

struct CertificationReport {
  std::string records_sha256;
  std::string backend;
  std::uint64_t n_bits = 0;
  std::string bell_quantity;
  double bell_value = 0.0;
  Verdict bell_verdict = Verdict::kInconclusive;
  double monobit_p = 0.0;
  RunsResult runs;
  double significance = kSignificanceLevel;
  bool certified = false;
  // Set when the backend is contextual: the violation was manufactured by
  // context-dependent hidden variables, so it certifies nothing physical.
  bool conspiracy_caveat = false;
};

// violation AND monobit p >= 0.01 AND runs test applicable with p >= 0.01.
bool certification_rule(Verdict verdict, double monobit_p, const RunsResult& runs) noexcept;

// Throws IntegrityError when the report was not produced from these records.
CertificationReport certify(const ExperimentRecords& records, const AnalysisReport& report);

std::string certification_to_json(const CertificationReport& report);

}  // namespace belltime
