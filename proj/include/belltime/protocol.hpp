#pragma once

// Runs the measurement protocol against a backend, estimates per-context
// correlators and evaluates the temporal Bell quantity or the CHSH quantity.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "belltime/hidden_variables.hpp"
#include "belltime/kernels.hpp"
#include "belltime/quantum_core.hpp"
#include "belltime/selector.hpp"

namespace belltime {

inline constexpr double kDefaultSigmaThreshold = 5.0;

enum class BackendKind { kQmSequential, kQmSinglet, kHiddenVariable, kConspiracy };

// "qm_sequential", "qm_singlet", "hv:<model>" or "conspiracy:<model>".
// Built-in hv models: "constant", "sign". Built-in conspiracy model:
// "qm-mimic". Anything else is a path to a JSON model file.
struct BackendSpec {
  BackendKind kind = BackendKind::kQmSequential;
  std::string model;

  static BackendSpec parse(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const BackendSpec&, const BackendSpec&) = default;
};

struct ExperimentConfig {
  BackendSpec mode;
  // (a, b, c) for a temporal experiment, (a, a', b, b') for CHSH.
  std::vector<Direction3> directions;
  std::uint64_t n_trials = 0;
  std::uint64_t selector_seed = 0;
  std::uint64_t outcome_seed = 0;
  double sigma_threshold = kDefaultSigmaThreshold;
  // Prepared state of each particle in sequential mode.
  QubitState initial_state = QubitState::spin_up();
  // Relative model paths resolve against this directory.
  std::filesystem::path base_dir;

  // Throws ValidationError naming the offending field.
  void validate() const;
  ExperimentKind kind() const;
};

struct TrialRecord {
  std::uint64_t index;
  MeasurementContext context;
  Spin s1;
  Spin s2;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

// Trial records in trial order, stored column-wise.
class ExperimentRecords {
 public:
  explicit ExperimentRecords(ExperimentKind kind, std::size_t n = 0)
      : kind_(kind), contexts_(n), s1_(n), s2_(n) {}

  ExperimentKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return contexts_.size(); }
  bool empty() const noexcept { return contexts_.empty(); }

  TrialRecord operator[](std::size_t i) const {
    return {i, MeasurementContext{kind_, contexts_[i]}, s1_[i], s2_[i]};
  }
  void push_back(std::uint8_t context, Spin s1, Spin s2);

  std::span<const std::uint8_t> contexts() const noexcept { return contexts_; }
  std::span<const std::int8_t> first() const noexcept { return s1_; }
  std::span<const std::int8_t> second() const noexcept { return s2_; }
  std::span<std::uint8_t> contexts() noexcept { return contexts_; }
  std::span<std::int8_t> first() noexcept { return s1_; }
  std::span<std::int8_t> second() noexcept { return s2_; }

  friend bool operator==(const ExperimentRecords&, const ExperimentRecords&) = default;

 private:
  ExperimentKind kind_;
  std::vector<std::uint8_t> contexts_;
  std::vector<std::int8_t> s1_;
  std::vector<std::int8_t> s2_;
};

// Produces outcome pairs for trials. trial() is the scalar reference; sample()
// evaluates a batch and must agree with trial() exactly.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual OutcomePair trial(const MeasurementContext& context, double u1, double u2) const = 0;

  virtual void sample(ExperimentKind kind, std::span<const std::uint8_t> contexts,
                      std::span<const double> u1, std::span<const double> u2,
                      std::span<std::int8_t> s1, std::span<std::int8_t> s2,
                      const kernels::KernelTable& kernels) const;

  virtual std::string name() const = 0;
};

std::unique_ptr<Backend> make_backend(const ExperimentConfig& config);

enum class EvaluationPath {
  kBatched,   // counter-derived variates and backend.sample through the kernels
  kPerTrial,  // TrialStream + backend.trial, one trial at a time
};

struct RunOptions {
  unsigned threads = 1;
  kernels::SimdLevel simd = kernels::SimdLevel::kScalar;
  EvaluationPath path = EvaluationPath::kBatched;
  std::size_t chunk_size = 1 << 16;

  // threads from BELLTIME_THREADS (default 1), simd from active_level().
  static RunOptions from_environment();
};

// Output is identical for every thread count, SIMD level and path.
ExperimentRecords run_experiment(const ExperimentConfig& config,
                                 const RunOptions& options = RunOptions::from_environment());
ExperimentRecords run_experiment(const ExperimentConfig& config, const Backend& backend,
                                 const RunOptions& options);

struct CorrelatorEstimate {
  std::string context;
  std::uint64_t n = 0;
  double mean = 0.0;
  // sqrt((1 - mean^2) / n)
  double std_error = 0.0;
};

struct CorrelatorEstimates {
  ExperimentKind kind = ExperimentKind::kTemporal;
  std::vector<CorrelatorEstimate> contexts;  // in context-index order

  // Throws InsufficientDataError naming the context if absent.
  const CorrelatorEstimate& at(std::string_view tag) const;
};

// Throws InsufficientDataError naming the first context with fewer than two
// trials.
CorrelatorEstimates estimate_correlators(
    const ExperimentRecords& records,
    kernels::SimdLevel simd = kernels::active_level());

enum class Verdict { kViolation, kConsistent, kInconclusive };

std::string_view to_string(Verdict verdict) noexcept;
std::optional<Verdict> parse_verdict(std::string_view name) noexcept;

// Violation iff (value - bound) / stderr >= sigma_threshold; otherwise
// consistent iff value <= bound; otherwise inconclusive.
Verdict classify(double value, double bound, double std_error, double sigma_threshold);

struct BellReport {
  std::string quantity;  // "B" (temporal) or "S" (CHSH)
  double value = 0.0;
  double bound = 0.0;
  double std_error = 0.0;
  double sigma_excess = 0.0;
  double sigma_threshold = kDefaultSigmaThreshold;
  Verdict verdict = Verdict::kInconclusive;
};

// B = |P(a,b) - P(a,c)| + P(b,c) against bound 1; errors added in quadrature.
BellReport bell_quantity(const CorrelatorEstimates& estimates,
                         double sigma_threshold = kDefaultSigmaThreshold);

// S = |P(a,b) - P(a,b')| + |P(a',b') + P(a',b)| against bound 2.
BellReport chsh_quantity(const CorrelatorEstimates& estimates,
                         double sigma_threshold = kDefaultSigmaThreshold);

// Picks bell_quantity or chsh_quantity from the estimates' kind.
BellReport evaluate_inequality(const CorrelatorEstimates& estimates,
                               double sigma_threshold = kDefaultSigmaThreshold);

// What the `analyze` step produces; also the input of certification.
struct AnalysisReport {
  ExperimentKind kind = ExperimentKind::kTemporal;
  std::string backend;         // mode string, or "unknown"
  std::string records_sha256;  // digest of the canonical records CSV
  std::uint64_t n_trials = 0;
  CorrelatorEstimates estimates;
  BellReport bell;
};

AnalysisReport analyze(const ExperimentRecords& records, std::string backend,
                       double sigma_threshold = kDefaultSigmaThreshold);

struct AnalyticTargets {
  ExperimentKind kind = ExperimentKind::kTemporal;
  std::vector<std::string> contexts;
  std::vector<double> correlators;
  double value = 0.0;  // B or S from the exact correlators
  double bound = 0.0;
};

// Exact per-context correlators of the configured backend: d1.d2 for
// sequential QM, -dA.dB for the singlet, 1 - 2 theta/pi for the sign model,
// finite sums for finite models.
AnalyticTargets analytic_targets(const ExperimentConfig& config);

}  // namespace belltime
