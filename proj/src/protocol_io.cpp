#include "belltime/protocol_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <nlohmann/json.hpp>

#include "belltime/errors.hpp"
#include "file_util.hpp"

namespace belltime {
namespace {

using nlohmann::json;

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": malformed JSON (" + e.what() + ")");
  }
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw ValidationError(std::string("config: missing required key '") + key + "'");
  }
  return doc[key];
}

std::uint64_t seed_from(const json& value, const char* key) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_string()) {
    if (auto seed = parse_seed(value.get<std::string>())) return *seed;
  }
  throw ValidationError(std::string(key) +
                        ": expected a 64-bit unsigned integer (decimal or 0x-prefixed hex)");
}

json real_or_text(double value) {
  if (std::isfinite(value)) return round_significant(value);
  if (std::isnan(value)) return "nan";
  return value > 0 ? "inf" : "-inf";
}

double real_from(const json& value, const char* key) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError(std::string("report: '") + key + "' is not a number");
}

const json& report_field(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw ValidationError(std::string("report: missing key '") + key + "'");
  }
  return doc[key];
}

std::string_view spin_text(int s) { return s > 0 ? "1" : "-1"; }

std::optional<int> parse_spin(std::string_view text) {
  if (text == "1" || text == "+1") return 1;
  if (text == "-1") return -1;
  return std::nullopt;
}

std::optional<ExperimentKind> kind_from_slot(std::string_view slot) {
  for (ExperimentKind kind : {ExperimentKind::kTemporal, ExperimentKind::kChsh}) {
    for (std::size_t s = 0; s < slot_count(kind); ++s) {
      if (slot_label(kind, s) == slot) return kind;
    }
  }
  return std::nullopt;
}

[[noreturn]] void row_error(std::size_t line, const std::string& message) {
  throw ValidationError("records line " + std::to_string(line) + ": " + message);
}

}  // namespace

std::optional<std::uint64_t> parse_seed(std::string_view text) noexcept {
  int base = 10;
  if (text.starts_with("0x") || text.starts_with("0X")) {
    base = 16;
    text.remove_prefix(2);
  }
  if (text.empty()) return std::nullopt;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

ExperimentConfig config_from_json(std::string_view text,
                                  const std::filesystem::path& base_dir) {
  const json doc = parse_json(text, "config");
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");

  ExperimentConfig config;
  config.base_dir = base_dir;

  const json& mode = require(doc, "mode");
  if (!mode.is_string()) throw ValidationError("mode: expected a string");
  config.mode = BackendSpec::parse(mode.get<std::string>());

  const json& directions = require(doc, "directions");
  if (!directions.is_array()) throw ValidationError("directions: expected an array");
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const json& d = directions[i];
    const std::string where = "directions[" + std::to_string(i) + "]";
    if (!d.is_array() || d.size() != 3 || !d[0].is_number() || !d[1].is_number() ||
        !d[2].is_number()) {
      throw ValidationError(where + ": expected an array of 3 numbers");
    }
    try {
      config.directions.push_back(
          Direction3::make(d[0].get<double>(), d[1].get<double>(), d[2].get<double>()));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }

  const json& n_trials = require(doc, "n_trials");
  if (!n_trials.is_number_integer() || n_trials.get<std::int64_t>() < 1) {
    throw ValidationError("n_trials: expected a positive integer");
  }
  config.n_trials = n_trials.get<std::uint64_t>();

  config.selector_seed = seed_from(require(doc, "selector_seed"), "selector_seed");
  config.outcome_seed = seed_from(require(doc, "outcome_seed"), "outcome_seed");

  if (doc.contains("sigma_threshold")) {
    if (!doc["sigma_threshold"].is_number()) {
      throw ValidationError("sigma_threshold: expected a number");
    }
    config.sigma_threshold = doc["sigma_threshold"].get<double>();
  }

  if (doc.contains("initial_state")) {
    const json& s = doc["initial_state"];
    auto amplitude = [&](std::size_t i) {
      const json& a = s[i];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw ValidationError("initial_state: expected [[re, im], [re, im]]");
      }
      return Complex(a[0].get<double>(), a[1].get<double>());
    };
    if (!s.is_array() || s.size() != 2) {
      throw ValidationError("initial_state: expected [[re, im], [re, im]]");
    }
    try {
      config.initial_state = QubitState::make(amplitude(0), amplitude(1));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("initial_state: ") + e.what());
    }
  }

  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(detail::read_text_file(path), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& config) {
  json directions = json::array();
  for (const auto& d : config.directions) directions.push_back({d.x(), d.y(), d.z()});
  const QubitState& s = config.initial_state;
  json doc = {
      {"mode", config.mode.to_string()},
      {"directions", directions},
      {"n_trials", config.n_trials},
      {"selector_seed", config.selector_seed},
      {"outcome_seed", config.outcome_seed},
      {"sigma_threshold", config.sigma_threshold},
      {"initial_state",
       {{s.up().real(), s.up().imag()}, {s.down().real(), s.down().imag()}}},
  };
  return doc.dump(2) + "\n";
}

std::string records_to_csv(const ExperimentRecords& records) {
  std::string out;
  out.reserve(kRecordsHeader.size() + 1 + records.size() * 24);
  out.append(kRecordsHeader);
  out.push_back('\n');
  std::array<char, 24> digits{};
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord r = records[i];
    const auto [x, y] = r.context.slots();
    const auto end = std::to_chars(digits.data(), digits.data() + digits.size(), r.index).ptr;
    out.append(digits.data(), end);
    out.push_back(',');
    out.append(r.context.tag());
    out.push_back(',');
    out.append(slot_label(records.kind(), x));
    out.push_back(',');
    out.append(slot_label(records.kind(), y));
    out.push_back(',');
    out.append(spin_text(r.s1));
    out.push_back(',');
    out.append(spin_text(r.s2));
    out.push_back('\n');
  }
  return out;
}

ExperimentRecords records_from_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.ends_with('\r')) line.remove_suffix(1);
    return line;
  };

  const auto header = next_line();
  if (!header) throw ValidationError("records: file is empty");
  if (*header != kRecordsHeader) {
    row_error(line_no, "expected header '" + std::string(kRecordsHeader) + "'");
  }

  std::optional<ExperimentRecords> records;
  while (const auto line = next_line()) {
    std::array<std::string_view, 6> fields;
    std::size_t count = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line->find(',', start);
      const std::string_view field = line->substr(start, comma - start);
      if (count < fields.size()) fields[count] = field;
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != 6) {
      row_error(line_no, "expected 6 fields, found " + std::to_string(count));
    }

    if (!records) {
      const auto kind = kind_from_slot(fields[2]);
      if (!kind) row_error(line_no, "unknown slot '" + std::string(fields[2]) + "'");
      records.emplace(*kind);
    }
    const ExperimentKind kind = records->kind();

    std::uint64_t index = 0;
    const auto [ptr, ec] =
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
      row_error(line_no, "trial index '" + std::string(fields[0]) + "' is not an integer");
    }
    if (index != records->size()) {
      row_error(line_no, "trial index " + std::to_string(index) + " out of order (expected " +
                             std::to_string(records->size()) + ")");
    }
    const auto context = MeasurementContext::from_tag(kind, fields[1]);
    if (!context) row_error(line_no, "unknown context '" + std::string(fields[1]) + "'");
    const auto [x, y] = context->slots();
    if (fields[2] != slot_label(kind, x) || fields[3] != slot_label(kind, y)) {
      row_error(line_no, "slots '" + std::string(fields[2]) + "," + std::string(fields[3]) +
                             "' do not match context " + std::string(fields[1]));
    }
    const auto s1 = parse_spin(fields[4]);
    const auto s2 = parse_spin(fields[5]);
    if (!s1 || !s2) row_error(line_no, "outcomes must be 1 or -1");
    records->push_back(context->index, *s1, *s2);
  }
  if (!records) return ExperimentRecords(ExperimentKind::kTemporal);
  return std::move(*records);
}

void write_records_csv(const std::filesystem::path& path, const ExperimentRecords& records) {
  detail::write_text_file(path, records_to_csv(records));
}

ExperimentRecords read_records_csv(const std::filesystem::path& path) {
  return records_from_csv(detail::read_text_file(path));
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) !=
      1) {
    throw IntegrityError("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string records_sha256(const ExperimentRecords& records) {
  return sha256_hex(records_to_csv(records));
}

double round_significant(double value) {
  if (!std::isfinite(value)) return value;
  std::array<char, 32> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%.12g", value);
  return std::strtod(buffer.data(), nullptr);
}

std::string report_to_json(const AnalysisReport& report) {
  json estimates = json::array();
  for (const auto& e : report.estimates.contexts) {
    estimates.push_back({{"context", e.context},
                         {"n", e.n},
                         {"mean", real_or_text(e.mean)},
                         {"stderr", real_or_text(e.std_error)}});
  }
  const BellReport& b = report.bell;
  json doc = {
      {"kind", std::string(to_string(report.kind))},
      {"backend", report.backend},
      {"records_sha256", report.records_sha256},
      {"n_trials", report.n_trials},
      {"estimates", estimates},
      {"bell",
       {{"quantity", b.quantity},
        {"value", real_or_text(b.value)},
        {"bound", real_or_text(b.bound)},
        {"stderr", real_or_text(b.std_error)},
        {"sigma_excess", real_or_text(b.sigma_excess)},
        {"sigma_threshold", real_or_text(b.sigma_threshold)},
        {"verdict", std::string(to_string(b.verdict))}}},
  };
  return doc.dump(2) + "\n";
}

AnalysisReport report_from_json(std::string_view text) {
  const json doc = parse_json(text, "report");
  if (!doc.is_object()) throw ValidationError("report: expected a JSON object");
  try {
    AnalysisReport report;
    const auto kind = parse_experiment_kind(report_field(doc, "kind").get<std::string>());
    if (!kind) throw ValidationError("report: unknown kind");
    report.kind = *kind;
    report.backend = report_field(doc, "backend").get<std::string>();
    report.records_sha256 = report_field(doc, "records_sha256").get<std::string>();
    report.n_trials = report_field(doc, "n_trials").get<std::uint64_t>();
    report.estimates.kind = *kind;
    for (const auto& e : report_field(doc, "estimates")) {
      CorrelatorEstimate est;
      est.context = report_field(e, "context").get<std::string>();
      est.n = report_field(e, "n").get<std::uint64_t>();
      est.mean = real_from(report_field(e, "mean"), "mean");
      est.std_error = real_from(report_field(e, "stderr"), "stderr");
      report.estimates.contexts.push_back(std::move(est));
    }
    const json& b = report_field(doc, "bell");
    report.bell.quantity = report_field(b, "quantity").get<std::string>();
    report.bell.value = real_from(report_field(b, "value"), "value");
    report.bell.bound = real_from(report_field(b, "bound"), "bound");
    report.bell.std_error = real_from(report_field(b, "stderr"), "stderr");
    report.bell.sigma_excess = real_from(report_field(b, "sigma_excess"), "sigma_excess");
    report.bell.sigma_threshold =
        real_from(report_field(b, "sigma_threshold"), "sigma_threshold");
    const auto verdict = parse_verdict(report_field(b, "verdict").get<std::string>());
    if (!verdict) throw ValidationError("report: unknown verdict");
    report.bell.verdict = *verdict;
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
}

}  // namespace belltime
