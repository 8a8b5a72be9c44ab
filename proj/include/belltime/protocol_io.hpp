#pragma once

// File formats of the protocol: JSON experiment config, records CSV
// (header trial,context,slot_x,slot_y,s1,s2) and the JSON analysis report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "belltime/protocol.hpp"

namespace belltime {

inline constexpr std::string_view kRecordsHeader = "trial,context,slot_x,slot_y,s1,s2";

// Keys: mode, directions, n_trials, selector_seed, outcome_seed, optional
// sigma_threshold and initial_state ([[re, im], [re, im]]). Seeds are JSON
// integers or strings in decimal or 0x-prefixed hex. Throws ValidationError
// naming the offending key.
ExperimentConfig config_from_json(std::string_view text,
                                  const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Lossless: directions and the initial state keep every bit.
std::string config_to_json(const ExperimentConfig& config);

std::optional<std::uint64_t> parse_seed(std::string_view text) noexcept;

std::string records_to_csv(const ExperimentRecords& records);
// Throws ValidationError citing the line number of the first malformed row.
ExperimentRecords records_from_csv(std::string_view text);
void write_records_csv(const std::filesystem::path& path, const ExperimentRecords& records);
ExperimentRecords read_records_csv(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
// SHA-256 of records_to_csv(records), i.e. of the records file.
std::string records_sha256(const ExperimentRecords& records);

// Real numbers are rounded to 12 significant digits.
std::string report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(std::string_view text);

// Rounds to 12 significant digits (non-finite values pass through).
double round_significant(double value);

}  // namespace belltime
