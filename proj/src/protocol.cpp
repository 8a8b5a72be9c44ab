#include "belltime/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "belltime/errors.hpp"
#include "belltime/protocol_io.hpp"

namespace belltime {
namespace {

constexpr std::string_view kQmSequential = "qm_sequential";
constexpr std::string_view kQmSinglet = "qm_singlet";
constexpr std::string_view kHvPrefix = "hv:";
constexpr std::string_view kConspiracyPrefix = "conspiracy:";

std::filesystem::path resolve_model_path(const ExperimentConfig& config) {
  std::filesystem::path path(config.mode.model);
  if (path.is_relative() && !config.base_dir.empty()) path = config.base_dir / path;
  return path;
}

void check_model_slots(std::size_t have, ExperimentKind kind) {
  if (have < slot_count(kind)) {
    throw ValidationError("model has " + std::to_string(have) + " response slots; a " +
                          std::string(to_string(kind)) + " experiment needs " +
                          std::to_string(slot_count(kind)));
  }
}

HVModel load_hv_model(const ExperimentConfig& config) {
  const ExperimentKind kind = config.kind();
  if (config.mode.model == "constant") return constant_model(slot_count(kind));
  if (config.mode.model == "sign") return SignHVModel(config.directions);
  FiniteHVModel model = load_finite_model(resolve_model_path(config));
  check_model_slots(model.slot_count(), kind);
  return model;
}

ContextualHVModel load_contextual_model(const ExperimentConfig& config) {
  const ExperimentKind kind = config.kind();
  if (config.mode.model == "qm-mimic") {
    return ContextualHVModel::qm_mimic(kind, config.directions);
  }
  return belltime::load_contextual_model(resolve_model_path(config), kind);
}

// Backends whose trials are two thresholded draws with per-context branch
// probabilities; batches go through the two-stage kernel.
class TwoStageBackend : public Backend {
 public:
  void sample(ExperimentKind, std::span<const std::uint8_t> contexts,
              std::span<const double> u1, std::span<const double> u2,
              std::span<std::int8_t> s1, std::span<std::int8_t> s2,
              const kernels::KernelTable& k) const override {
    k.two_stage_outcomes(contexts, u1, u2, table_, s1, s2);
  }

 protected:
  void set_branching(std::size_t context, const BranchProbabilities& p) {
    table_.first_plus[context] = p.first_plus;
    table_.second_plus_after_plus[context] = p.second_plus_after_plus;
    table_.second_plus_after_minus[context] = p.second_plus_after_minus;
  }

 private:
  kernels::TwoStageTable table_;
};

class QmSequentialBackend final : public TwoStageBackend {
 public:
  QmSequentialBackend(const QubitState& initial, std::vector<Direction3> directions)
      : initial_(initial), directions_(std::move(directions)) {
    for (std::size_t c = 0; c < context_count(ExperimentKind::kTemporal); ++c) {
      const auto [x, y] =
          MeasurementContext{ExperimentKind::kTemporal, static_cast<std::uint8_t>(c)}.slots();
      set_branching(c, sequential_branching(initial_, directions_[x], directions_[y]));
    }
  }

  OutcomePair trial(const MeasurementContext& context, double u1, double u2) const override {
    const auto [x, y] = context.slots();
    return sequential_trial(initial_, directions_[x], directions_[y], u1, u2);
  }

  std::string name() const override { return std::string(kQmSequential); }

 private:
  QubitState initial_;
  std::vector<Direction3> directions_;
};

class QmSingletBackend final : public TwoStageBackend {
 public:
  explicit QmSingletBackend(std::vector<Direction3> directions)
      : directions_(std::move(directions)) {
    for (std::size_t c = 0; c < context_count(ExperimentKind::kChsh); ++c) {
      const auto [x, y] =
          MeasurementContext{ExperimentKind::kChsh, static_cast<std::uint8_t>(c)}.slots();
      set_branching(c, singlet_branching(directions_[x], directions_[y]));
    }
  }

  OutcomePair trial(const MeasurementContext& context, double u1, double u2) const override {
    const auto [x, y] = context.slots();
    return singlet_joint_trial(directions_[x], directions_[y], u1, u2);
  }

  std::string name() const override { return std::string(kQmSinglet); }

 private:
  std::vector<Direction3> directions_;
};

class HiddenVariableBackend final : public Backend {
 public:
  HiddenVariableBackend(HVModel model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {}

  OutcomePair trial(const MeasurementContext& context, double u1, double u2) const override {
    return hv_trial(model_, context, u1, u2);
  }

  std::string name() const override { return name_; }

 private:
  HVModel model_;
  std::string name_;
};

class MimicBackend final : public TwoStageBackend {
 public:
  MimicBackend(ContextualHVModel model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {
    for (std::size_t c = 0; c < context_count(model_.kind()); ++c) {
      set_branching(c, model_.mimic_branching(
                           MeasurementContext{model_.kind(), static_cast<std::uint8_t>(c)}));
    }
  }

  OutcomePair trial(const MeasurementContext& context, double u1, double u2) const override {
    return conspiracy_trial(model_, context, u1, u2);
  }

  std::string name() const override { return name_; }

 private:
  ContextualHVModel model_;
  std::string name_;
};

class ContextualTableBackend final : public Backend {
 public:
  ContextualTableBackend(ContextualHVModel model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {}

  OutcomePair trial(const MeasurementContext& context, double u1, double u2) const override {
    return conspiracy_trial(model_, context, u1, u2);
  }

  std::string name() const override { return name_; }

 private:
  ContextualHVModel model_;
  std::string name_;
};

double sigma_excess(double value, double bound, double std_error) {
  if (std_error > 0.0) return (value - bound) / std_error;
  if (value > bound) return std::numeric_limits<double>::infinity();
  if (value < bound) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

BellReport make_report(std::string quantity, double value, double bound, double std_error,
                       double sigma_threshold) {
  BellReport report;
  report.quantity = std::move(quantity);
  report.value = value;
  report.bound = bound;
  report.std_error = std_error;
  report.sigma_excess = sigma_excess(value, bound, std_error);
  report.sigma_threshold = sigma_threshold;
  report.verdict = classify(value, bound, std_error, sigma_threshold);
  return report;
}

}  // namespace

BackendSpec BackendSpec::parse(std::string_view text) {
  if (text == kQmSequential) return {BackendKind::kQmSequential, ""};
  if (text == kQmSinglet) return {BackendKind::kQmSinglet, ""};
  auto with_model = [&](std::string_view prefix, BackendKind kind) -> std::optional<BackendSpec> {
    if (!text.starts_with(prefix)) return std::nullopt;
    const std::string_view model = text.substr(prefix.size());
    if (model.empty()) {
      throw ValidationError("mode: '" + std::string(text) + "' names no model");
    }
    return BackendSpec{kind, std::string(model)};
  };
  if (auto spec = with_model(kHvPrefix, BackendKind::kHiddenVariable)) return *spec;
  if (auto spec = with_model(kConspiracyPrefix, BackendKind::kConspiracy)) return *spec;
  throw ValidationError("mode: unknown mode '" + std::string(text) +
                        "' (expected qm_sequential, qm_singlet, hv:<model> or "
                        "conspiracy:<model>)");
}

std::string BackendSpec::to_string() const {
  switch (kind) {
    case BackendKind::kQmSequential:
      return std::string(kQmSequential);
    case BackendKind::kQmSinglet:
      return std::string(kQmSinglet);
    case BackendKind::kHiddenVariable:
      return std::string(kHvPrefix) + model;
    case BackendKind::kConspiracy:
      return std::string(kConspiracyPrefix) + model;
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (n_trials < 1) throw ValidationError("n_trials: must be at least 1");
  const std::size_t n_dirs = directions.size();
  switch (mode.kind) {
    case BackendKind::kQmSequential:
      if (n_dirs != 3) {
        throw ValidationError("directions: qm_sequential needs 3 directions (a, b, c), got " +
                              std::to_string(n_dirs));
      }
      break;
    case BackendKind::kQmSinglet:
      if (n_dirs != 4) {
        throw ValidationError("directions: qm_singlet needs 4 directions (a, a', b, b'), got " +
                              std::to_string(n_dirs));
      }
      break;
    case BackendKind::kHiddenVariable:
    case BackendKind::kConspiracy:
      if (n_dirs != 3 && n_dirs != 4) {
        throw ValidationError("directions: expected 3 (temporal) or 4 (CHSH) directions, got " +
                              std::to_string(n_dirs));
      }
      break;
  }
  if (!(sigma_threshold > 0.0) || !std::isfinite(sigma_threshold)) {
    throw ValidationError("sigma_threshold: must be a positive finite number");
  }
}

ExperimentKind ExperimentConfig::kind() const {
  switch (mode.kind) {
    case BackendKind::kQmSequential:
      return ExperimentKind::kTemporal;
    case BackendKind::kQmSinglet:
      return ExperimentKind::kChsh;
    default:
      return directions.size() == 4 ? ExperimentKind::kChsh : ExperimentKind::kTemporal;
  }
}

void ExperimentRecords::push_back(std::uint8_t context, Spin s1, Spin s2) {
  contexts_.push_back(context);
  s1_.push_back(static_cast<std::int8_t>(s1));
  s2_.push_back(static_cast<std::int8_t>(s2));
}

void Backend::sample(ExperimentKind kind, std::span<const std::uint8_t> contexts,
                     std::span<const double> u1, std::span<const double> u2,
                     std::span<std::int8_t> s1, std::span<std::int8_t> s2,
                     const kernels::KernelTable&) const {
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const OutcomePair pair = trial(MeasurementContext{kind, contexts[i]}, u1[i], u2[i]);
    s1[i] = static_cast<std::int8_t>(pair.first);
    s2[i] = static_cast<std::int8_t>(pair.second);
  }
}

std::unique_ptr<Backend> make_backend(const ExperimentConfig& config) {
  config.validate();
  switch (config.mode.kind) {
    case BackendKind::kQmSequential:
      return std::make_unique<QmSequentialBackend>(config.initial_state, config.directions);
    case BackendKind::kQmSinglet:
      return std::make_unique<QmSingletBackend>(config.directions);
    case BackendKind::kHiddenVariable:
      return std::make_unique<HiddenVariableBackend>(load_hv_model(config),
                                                     config.mode.to_string());
    case BackendKind::kConspiracy: {
      ContextualHVModel model = load_contextual_model(config);
      if (model.is_qm_mimic()) {
        return std::make_unique<MimicBackend>(std::move(model), config.mode.to_string());
      }
      return std::make_unique<ContextualTableBackend>(std::move(model),
                                                      config.mode.to_string());
    }
  }
  throw ValidationError("mode: unsupported backend");
}

RunOptions RunOptions::from_environment() {
  RunOptions options;
  if (const char* env = std::getenv("BELLTIME_THREADS"); env != nullptr && *env != '\0') {
    unsigned value = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
      throw ValidationError("BELLTIME_THREADS: expected a positive integer, got '" +
                            std::string(text) + "'");
    }
    options.threads = value;
  }
  options.simd = kernels::active_level();
  return options;
}

ExperimentRecords run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto backend = make_backend(config);
  return run_experiment(config, *backend, options);
}

ExperimentRecords run_experiment(const ExperimentConfig& config, const Backend& backend,
                                 const RunOptions& options) {
  config.validate();
  if (options.threads == 0) throw ValidationError("threads: must be at least 1");
  if (options.chunk_size == 0) throw ValidationError("chunk_size: must be at least 1");
  const ExperimentKind kind = config.kind();
  const std::size_t n = config.n_trials;
  const kernels::KernelTable& k = kernels::kernels(options.simd);

  ExperimentRecords records(kind, n);
  {
    // The selector runs alone and first: contexts never see outcomes.
    const auto contexts = generate_contexts(config.selector_seed, kind, n);
    std::copy(contexts.begin(), contexts.end(), records.contexts().begin());
  }

  const std::uint64_t key = TrialStream::stream_key(config.outcome_seed);
  const std::size_t n_chunks = (n + options.chunk_size - 1) / options.chunk_size;
  std::atomic<std::size_t> next_chunk{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    std::vector<double> u1(options.chunk_size);
    std::vector<double> u2(options.chunk_size);
    try {
      for (std::size_t chunk = next_chunk++; chunk < n_chunks; chunk = next_chunk++) {
        const std::size_t begin = chunk * options.chunk_size;
        const std::size_t len = std::min(options.chunk_size, n - begin);
        const auto ctx = std::span<const std::uint8_t>(records.contexts()).subspan(begin, len);
        const auto s1 = records.first().subspan(begin, len);
        const auto s2 = records.second().subspan(begin, len);
        if (options.path == EvaluationPath::kBatched) {
          const std::span<double> a(u1.data(), len);
          const std::span<double> b(u2.data(), len);
          k.trial_uniforms(key, begin, a, b);
          backend.sample(kind, ctx, a, b, s1, s2, k);
        } else {
          for (std::size_t i = 0; i < len; ++i) {
            TrialStream stream(config.outcome_seed, begin + i);
            const double first = stream.next_uniform();
            const double second = stream.next_uniform();
            const OutcomePair pair =
                backend.trial(MeasurementContext{kind, ctx[i]}, first, second);
            s1[i] = static_cast<std::int8_t>(pair.first);
            s2[i] = static_cast<std::int8_t>(pair.second);
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next_chunk = n_chunks;
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(options.threads, std::max<std::size_t>(n_chunks, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

const CorrelatorEstimate& CorrelatorEstimates::at(std::string_view tag) const {
  for (const auto& e : contexts) {
    if (e.context == tag) return e;
  }
  throw InsufficientDataError("no estimate for context " + std::string(tag));
}

CorrelatorEstimates estimate_correlators(const ExperimentRecords& records,
                                         kernels::SimdLevel simd) {
  std::array<std::int64_t, kernels::kMaxContexts> sums{};
  std::array<std::int64_t, kernels::kMaxContexts> counts{};
  kernels::kernels(simd).accumulate_products(records.contexts(), records.first(),
                                             records.second(), sums, counts);
  CorrelatorEstimates out;
  out.kind = records.kind();
  for (std::size_t c = 0; c < context_count(records.kind()); ++c) {
    const MeasurementContext context{records.kind(), static_cast<std::uint8_t>(c)};
    if (counts[c] < 2) {
      throw InsufficientDataError("context " + std::string(context.tag()) + " has " +
                                  std::to_string(counts[c]) +
                                  " trial(s); at least 2 are required");
    }
    CorrelatorEstimate e;
    e.context = std::string(context.tag());
    e.n = static_cast<std::uint64_t>(counts[c]);
    e.mean = static_cast<double>(sums[c]) / static_cast<double>(counts[c]);
    e.std_error = std::sqrt(std::max(0.0, 1.0 - e.mean * e.mean) / static_cast<double>(e.n));
    out.contexts.push_back(std::move(e));
  }
  return out;
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::kViolation:
      return "violation";
    case Verdict::kConsistent:
      return "consistent";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

std::optional<Verdict> parse_verdict(std::string_view name) noexcept {
  if (name == "violation") return Verdict::kViolation;
  if (name == "consistent") return Verdict::kConsistent;
  if (name == "inconclusive") return Verdict::kInconclusive;
  return std::nullopt;
}

Verdict classify(double value, double bound, double std_error, double sigma_threshold) {
  if (!(sigma_threshold > 0.0)) throw ValidationError("sigma_threshold: must be positive");
  if (!(std_error >= 0.0)) throw ValidationError("standard error must be nonnegative");
  if (sigma_excess(value, bound, std_error) >= sigma_threshold) return Verdict::kViolation;
  if (value <= bound) return Verdict::kConsistent;
  return Verdict::kInconclusive;
}

BellReport bell_quantity(const CorrelatorEstimates& estimates, double sigma_threshold) {
  const auto& ab = estimates.at("AB");
  const auto& ac = estimates.at("AC");
  const auto& bc = estimates.at("BC");
  const double value = std::abs(ab.mean - ac.mean) + bc.mean;
  const double se = std::sqrt(ab.std_error * ab.std_error + ac.std_error * ac.std_error +
                              bc.std_error * bc.std_error);
  return make_report("B", value, 1.0, se, sigma_threshold);
}

BellReport chsh_quantity(const CorrelatorEstimates& estimates, double sigma_threshold) {
  const auto& ab = estimates.at("AB");
  const auto& abp = estimates.at("AB'");
  const auto& apb = estimates.at("A'B");
  const auto& apbp = estimates.at("A'B'");
  const double value = std::abs(ab.mean - abp.mean) + std::abs(apbp.mean + apb.mean);
  const double se =
      std::sqrt(ab.std_error * ab.std_error + abp.std_error * abp.std_error +
                apb.std_error * apb.std_error + apbp.std_error * apbp.std_error);
  return make_report("S", value, 2.0, se, sigma_threshold);
}

BellReport evaluate_inequality(const CorrelatorEstimates& estimates, double sigma_threshold) {
  return estimates.kind == ExperimentKind::kTemporal
             ? bell_quantity(estimates, sigma_threshold)
             : chsh_quantity(estimates, sigma_threshold);
}

AnalysisReport analyze(const ExperimentRecords& records, std::string backend,
                       double sigma_threshold) {
  AnalysisReport report;
  report.kind = records.kind();
  report.backend = std::move(backend);
  report.records_sha256 = records_sha256(records);
  report.n_trials = records.size();
  report.estimates = estimate_correlators(records);
  report.bell = evaluate_inequality(report.estimates, sigma_threshold);
  return report;
}

AnalyticTargets analytic_targets(const ExperimentConfig& config) {
  config.validate();
  AnalyticTargets out;
  out.kind = config.kind();
  const auto& d = config.directions;

  std::optional<HVModel> hv;
  std::optional<ContextualHVModel> contextual;
  if (config.mode.kind == BackendKind::kHiddenVariable) hv = load_hv_model(config);
  if (config.mode.kind == BackendKind::kConspiracy) contextual = load_contextual_model(config);

  for (std::size_t c = 0; c < context_count(out.kind); ++c) {
    const MeasurementContext context{out.kind, static_cast<std::uint8_t>(c)};
    const auto [x, y] = context.slots();
    double value = 0.0;
    switch (config.mode.kind) {
      case BackendKind::kQmSequential:
        value = analytic_sequential_correlator(d[x], d[y]);
        break;
      case BackendKind::kQmSinglet:
        value = singlet_analytic_correlator(d[x], d[y]);
        break;
      case BackendKind::kHiddenVariable:
        value = hv->is_finite() ? exact_correlator(*hv, x, y)
                                : sign_model_correlator(d[x], d[y]);
        break;
      case BackendKind::kConspiracy:
        value = contextual->exact_correlator(context);
        break;
    }
    out.contexts.emplace_back(context.tag());
    out.correlators.push_back(value);
  }
  const auto& p = out.correlators;
  if (out.kind == ExperimentKind::kTemporal) {
    out.value = temporal_bell_value({p[0], p[1], p[2]});
    out.bound = 1.0;
  } else {
    out.value = chsh_value({p[0], p[1], p[2], p[3]});
    out.bound = 2.0;
  }
  return out;
}

}  // namespace belltime
