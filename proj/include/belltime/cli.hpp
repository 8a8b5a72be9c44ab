#pragma once

// Command-line front end. Pipeline: run -> records.csv + manifest.json,
// analyze -> report.json, certify -> bits.txt + certification.json.
// oracle prints exact correlators for a geometry.
//
// Exit codes: 0 success, 1 validation, 2 I/O, 3 integrity.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "belltime/protocol.hpp"
#include "belltime/randomness.hpp"

namespace belltime::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRecordsFile = "records.csv";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kBitsFile = "bits.txt";
inline constexpr const char* kCertificationFile = "certification.json";
inline constexpr const char* kOracleFile = "oracle.json";

struct RunManifest {
  ExperimentConfig config;
  std::string version = kVersion;
  std::filesystem::path records_path;
  std::string records_sha256;
  unsigned threads = 1;
  std::string simd;
  double duration_seconds = 0.0;
};

std::string manifest_to_json(const RunManifest& manifest);

// Accepts either a plain config or a manifest (whose "config" block is
// used, with model paths resolved against its recorded base directory).
ExperimentConfig load_config_or_manifest(const std::filesystem::path& path);

RunManifest cmd_run(const std::filesystem::path& config_path,
                    const std::filesystem::path& out_dir, const RunOptions& options);

// Backend label and sigma threshold come from config_path when given,
// otherwise from a manifest.json beside the records, otherwise defaults.
AnalysisReport cmd_analyze(const std::filesystem::path& records_path,
                           const std::optional<std::filesystem::path>& config_path,
                           const std::filesystem::path& out_dir);

CertificationReport cmd_certify(const std::filesystem::path& records_path,
                                const std::filesystem::path& report_path,
                                const std::filesystem::path& out_dir);

// Named geometries: "temporal-max" (b.c = 0, a = (b - c)/sqrt2),
// "chsh-tsirelson" (coplanar 0, 90, 45, 135 degrees), "collinear"
// (a = b = c).
ExperimentConfig preset_config(const std::string& name);

// JSON with the exact per-context correlators, the Bell/CHSH value and, for
// the quantum backends, the brute-force matrix cross-check.
std::string cmd_oracle(const ExperimentConfig& config);

// Full command line; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace belltime::cli
