#include "belltime/randomness.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "belltime/errors.hpp"
#include "belltime/protocol_io.hpp"

namespace belltime {
namespace {

void check_length(std::size_t n, const char* test) {
  if (n < kMinimumTestBits) {
    throw ValidationError(std::string(test) + " needs at least " +
                          std::to_string(kMinimumTestBits) + " bits, got " +
                          std::to_string(n));
  }
}

}  // namespace

std::string BitString::to_text() const {
  std::string out;
  out.reserve(bits.size() + bits.size() / 64 + 1);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    out.push_back(bits[i] ? '1' : '0');
    if (i % 64 == 63 || i + 1 == bits.size()) out.push_back('\n');
  }
  return out;
}

BitString extract_bits(const ExperimentRecords& records) {
  if (records.empty()) throw ValidationError("cannot extract bits from zero records");
  BitString out;
  out.records_sha256 = records_sha256(records);
  out.bits.resize(2 * records.size());
  const auto s1 = records.first();
  const auto s2 = records.second();
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.bits[2 * i] = s1[i] > 0 ? 1 : 0;
    out.bits[2 * i + 1] = s2[i] > 0 ? 1 : 0;
  }
  return out;
}

double monobit_test(std::span<const std::uint8_t> bits, kernels::SimdLevel simd) {
  check_length(bits.size(), "monobit test");
  const auto stats = kernels::kernels(simd).bit_stats(bits);
  const double n = static_cast<double>(bits.size());
  const double s = 2.0 * static_cast<double>(stats.ones) - n;
  return std::erfc(std::abs(s) / std::sqrt(2.0 * n));
}

RunsResult runs_test(std::span<const std::uint8_t> bits, kernels::SimdLevel simd) {
  check_length(bits.size(), "runs test");
  const auto stats = kernels::kernels(simd).bit_stats(bits);
  const double n = static_cast<double>(bits.size());
  RunsResult result;
  result.ones_fraction = static_cast<double>(stats.ones) / n;
  result.runs = stats.transitions + 1;
  const double pi = result.ones_fraction;
  if (!(std::abs(pi - 0.5) < 2.0 / std::sqrt(n))) return result;
  result.applicable = true;
  const double spread = pi * (1.0 - pi);
  result.p_value = std::erfc(std::abs(static_cast<double>(result.runs) - 2.0 * n * spread) /
                             (2.0 * std::sqrt(2.0 * n) * spread));
  return result;
}

bool certification_rule(Verdict verdict, double monobit_p, const RunsResult& runs) noexcept {
  return verdict == Verdict::kViolation && monobit_p >= kSignificanceLevel &&
         runs.applicable && runs.p_value >= kSignificanceLevel;
}

CertificationReport certify(const ExperimentRecords& records, const AnalysisReport& report) {
  const BitString bits = extract_bits(records);
  if (bits.records_sha256 != report.records_sha256 || report.n_trials != records.size()) {
    throw IntegrityError("report was not produced from these records (sha256 " +
                         bits.records_sha256 + " vs report " + report.records_sha256 + ")");
  }
  CertificationReport out;
  out.records_sha256 = bits.records_sha256;
  out.backend = report.backend;
  out.n_bits = bits.bits.size();
  out.bell_quantity = report.bell.quantity;
  out.bell_value = report.bell.value;
  out.bell_verdict = report.bell.verdict;
  out.monobit_p = monobit_test(bits.bits);
  out.runs = runs_test(bits.bits);
  out.certified = certification_rule(out.bell_verdict, out.monobit_p, out.runs);
  out.conspiracy_caveat = report.backend.starts_with("conspiracy:");
  return out;
}

std::string certification_to_json(const CertificationReport& report) {
  using nlohmann::json;
  json runs = {{"applicable", report.runs.applicable},
               {"runs", report.runs.runs},
               {"ones_fraction", round_significant(report.runs.ones_fraction)}};
  runs["p_value"] = report.runs.applicable ? json(round_significant(report.runs.p_value))
                                           : json(nullptr);
  json doc = {
      {"records_sha256", report.records_sha256},
      {"backend", report.backend},
      {"extraction_rule", std::string(kExtractionRule)},
      {"n_bits", report.n_bits},
      {"bell",
       {{"quantity", report.bell_quantity},
        {"value", round_significant(report.bell_value)},
        {"verdict", std::string(to_string(report.bell_verdict))}}},
      {"monobit_p", round_significant(report.monobit_p)},
      {"runs_test", runs},
      {"significance", report.significance},
      {"certified", report.certified},
      {"conspiracy_caveat", report.conspiracy_caveat},
      {"assumptions", json::array({"no-conspiracy"})},
      {"min_entropy_bound", nullptr},
  };
  return doc.dump(2) + "\n";
}

}  // namespace belltime
