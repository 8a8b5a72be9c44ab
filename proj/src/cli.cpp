#include "belltime/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "belltime/errors.hpp"
#include "belltime/protocol_io.hpp"
#include "file_util.hpp"

namespace belltime::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  if (dir.empty()) return;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

json parse_json_file(const fs::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

fs::path directory_of(const fs::path& file) {
  const fs::path parent = file.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  json doc = {
      {"version", m.version},
      {"config", json::parse(config_to_json(m.config))},
      {"model_base_dir", m.config.base_dir.string()},
      {"selector_seed", m.config.selector_seed},
      {"outcome_seed", m.config.outcome_seed},
      {"records", m.records_path.string()},
      {"records_sha256", m.records_sha256},
      {"threads", m.threads},
      {"simd", m.simd},
      {"duration_seconds", round_significant(m.duration_seconds)},
  };
  return doc.dump(2) + "\n";
}

ExperimentConfig load_config_or_manifest(const fs::path& path) {
  const json doc = parse_json_file(path);
  if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) {
    fs::path base = directory_of(path);
    if (doc.contains("model_base_dir") && doc["model_base_dir"].is_string()) {
      base = doc["model_base_dir"].get<std::string>();
    }
    return config_from_json(doc["config"].dump(), base);
  }
  return config_from_json(doc.dump(), directory_of(path));
}

RunManifest cmd_run(const fs::path& config_path, const fs::path& out_dir,
                    const RunOptions& options) {
  RunManifest manifest;
  manifest.config = load_config_or_manifest(config_path);
  if (!manifest.config.base_dir.empty()) {
    manifest.config.base_dir = fs::absolute(manifest.config.base_dir);
  }
  ensure_directory(out_dir);

  const auto start = std::chrono::steady_clock::now();
  const ExperimentRecords records = run_experiment(manifest.config, options);
  const std::string csv = records_to_csv(records);
  manifest.records_path = out_dir / kRecordsFile;
  detail::write_text_file(manifest.records_path, csv);
  manifest.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  manifest.records_sha256 = sha256_hex(csv);
  manifest.threads = options.threads;
  manifest.simd = std::string(kernels::to_string(options.simd));
  detail::write_text_file(out_dir / kManifestFile, manifest_to_json(manifest));
  return manifest;
}

AnalysisReport cmd_analyze(const fs::path& records_path,
                           const std::optional<fs::path>& config_path,
                           const fs::path& out_dir) {
  const ExperimentRecords records = read_records_csv(records_path);

  std::optional<ExperimentConfig> config;
  if (config_path) {
    config = load_config_or_manifest(*config_path);
  } else if (const fs::path beside = directory_of(records_path) / kManifestFile;
             fs::exists(beside)) {
    config = load_config_or_manifest(beside);
  }
  std::string backend = "unknown";
  double sigma = kDefaultSigmaThreshold;
  if (config) {
    if (config->kind() != records.kind()) {
      throw ValidationError("records are from a " + std::string(to_string(records.kind())) +
                            " experiment but the config describes a " +
                            std::string(to_string(config->kind())) + " one");
    }
    backend = config->mode.to_string();
    sigma = config->sigma_threshold;
  }

  AnalysisReport report = analyze(records, backend, sigma);
  ensure_directory(out_dir);
  detail::write_text_file(out_dir / kReportFile, report_to_json(report));
  return report;
}

CertificationReport cmd_certify(const fs::path& records_path, const fs::path& report_path,
                                const fs::path& out_dir) {
  const ExperimentRecords records = read_records_csv(records_path);
  const AnalysisReport report = report_from_json(detail::read_text_file(report_path));
  CertificationReport certification = certify(records, report);
  ensure_directory(out_dir);
  detail::write_text_file(out_dir / kBitsFile, extract_bits(records).to_text());
  detail::write_text_file(out_dir / kCertificationFile, certification_to_json(certification));
  return certification;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig config;
  config.n_trials = 1;
  const double h = 1.0 / std::sqrt(2.0);
  if (name == "temporal-max") {
    config.mode = BackendSpec::parse("qm_sequential");
    config.directions = {Direction3::make(h, -h, 0.0), Direction3::unit_x(),
                         Direction3::unit_y()};
  } else if (name == "chsh-tsirelson") {
    config.mode = BackendSpec::parse("qm_singlet");
    const double deg = std::numbers::pi / 180.0;
    for (double angle : {0.0, 90.0, 45.0, 135.0}) {
      config.directions.push_back(Direction3::from_angles(angle * deg, 0.0));
    }
  } else if (name == "collinear") {
    config.mode = BackendSpec::parse("qm_sequential");
    config.directions.assign(3, Direction3::unit_z());
  } else {
    throw ValidationError("preset: unknown geometry '" + name +
                          "' (expected temporal-max, chsh-tsirelson or collinear)");
  }
  return config;
}

std::string cmd_oracle(const ExperimentConfig& config) {
  const AnalyticTargets targets = analytic_targets(config);
  json contexts = json::array();
  for (std::size_t c = 0; c < targets.contexts.size(); ++c) {
    json entry = {{"context", targets.contexts[c]},
                  {"correlator", round_significant(targets.correlators[c])}};
    const auto [x, y] =
        MeasurementContext{targets.kind, static_cast<std::uint8_t>(c)}.slots();
    const auto& d = config.directions;
    if (config.mode.kind == BackendKind::kQmSequential) {
      entry["brute_force"] = round_significant(
          brute_force_sequential_correlator(config.initial_state, d[x], d[y]));
    } else if (config.mode.kind == BackendKind::kQmSinglet) {
      entry["brute_force"] = round_significant(singlet_brute_force_correlator(d[x], d[y]));
    }
    contexts.push_back(entry);
  }
  json doc = {
      {"kind", std::string(to_string(targets.kind))},
      {"backend", config.mode.to_string()},
      {"contexts", contexts},
      {"quantity", targets.kind == ExperimentKind::kTemporal ? "B" : "S"},
      {"value", round_significant(targets.value)},
      {"bound", targets.bound},
      {"exceeds_bound", targets.value > targets.bound},
  };
  return doc.dump(2) + "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"belltime: temporal Bell / CHSH experiment simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string records_path;
  std::string report_path;
  std::string preset;
  std::string simd;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Run an experiment and write records.csv + manifest.json");
  run->add_option("--config", config_path, "Experiment config (or a manifest)")->required();
  run->add_option("--out-dir", out_dir, "Output directory (default: current directory)");
  run->add_option("--threads", threads, "Worker threads (overrides BELLTIME_THREADS)");
  run->add_option("--simd", simd, "Kernel level: scalar or avx2 (overrides BELLTIME_SIMD)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Estimate correlators and the Bell/CHSH quantity");
  analyze_cmd->add_option("--records", records_path, "Records CSV")->required();
  analyze_cmd->add_option("--config", config_path, "Config or manifest (default: manifest beside the records)");
  analyze_cmd->add_option("--out-dir", out_dir, "Output directory (default: records directory)");

  auto* certify_cmd = app.add_subcommand("certify", "Extract bits and certify them");
  certify_cmd->add_option("--records", records_path, "Records CSV")->required();
  certify_cmd->add_option("--report", report_path, "Report JSON from analyze")->required();
  certify_cmd->add_option("--out-dir", out_dir, "Output directory (default: records directory)");

  auto* oracle = app.add_subcommand("oracle", "Print exact correlators for a geometry");
  auto* oracle_config = oracle->add_option("--config", config_path, "Config with mode and directions");
  auto* oracle_preset =
      oracle->add_option("--preset", preset, "temporal-max, chsh-tsirelson or collinear");
  oracle_config->excludes(oracle_preset);
  oracle->add_option("--out-dir", out_dir, "Also write oracle.json here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  }

  try {
    if (run->parsed()) {
      RunOptions options = RunOptions::from_environment();
      if (threads > 0) options.threads = threads;
      if (!simd.empty()) {
        const auto level = kernels::parse_simd_level(simd);
        if (!level) throw ValidationError("--simd: unknown level '" + simd + "'");
        kernels::kernels(*level);  // throws if unsupported
        options.simd = *level;
      }
      const RunManifest m = cmd_run(config_path, out_dir.empty() ? "." : out_dir, options);
      out << "wrote " << m.config.n_trials << " records to " << m.records_path.string()
          << " (sha256 " << m.records_sha256 << ")\n";
    } else if (analyze_cmd->parsed()) {
      const fs::path dir = out_dir.empty() ? directory_of(records_path) : fs::path(out_dir);
      std::optional<fs::path> cfg;
      if (!config_path.empty()) cfg = config_path;
      const AnalysisReport r = cmd_analyze(records_path, cfg, dir);
      out << r.bell.quantity << " = " << r.bell.value << " +- " << r.bell.std_error
          << " (bound " << r.bell.bound << ", " << r.bell.sigma_excess << " sigma): "
          << to_string(r.bell.verdict) << "\n";
    } else if (certify_cmd->parsed()) {
      const fs::path dir = out_dir.empty() ? directory_of(records_path) : fs::path(out_dir);
      const CertificationReport c = cmd_certify(records_path, report_path, dir);
      out << "certified: " << (c.certified ? "true" : "false")
          << (c.conspiracy_caveat ? " (conspiracy caveat: contextual backend)" : "") << "\n";
    } else if (oracle->parsed()) {
      ExperimentConfig config;
      if (!config_path.empty()) {
        config = load_config_or_manifest(config_path);
      } else if (!preset.empty()) {
        config = preset_config(preset);
      } else {
        throw ValidationError("oracle: give --config or --preset");
      }
      const std::string text = cmd_oracle(config);
      out << text;
      if (!out_dir.empty()) {
        ensure_directory(out_dir);
        detail::write_text_file(fs::path(out_dir) / kOracleFile, text);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  }
  return 0;
}

}  // namespace belltime::cli
