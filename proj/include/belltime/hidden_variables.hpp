#pragma once

// Deterministic hidden-variable backends.
//
// A non-contextual model has one distribution rho(lambda) shared by every
// measurement context, and a response S(lambda, slot) in {+1, -1}. Responses
// key on the slot (t1, t2, t3 or a, a', b, b'); directions enter only through
// the experiment's fixed slot -> direction binding.
//
// A contextual ("conspiracy") model attaches a different distribution to each
// context, which is exactly what the inequalities rule out.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "belltime/quantum_core.hpp"
#include "belltime/selector.hpp"

namespace belltime {

inline constexpr double kWeightTolerance = 1e-12;

class FiniteHVModel {
 public:
  // responses[lambda][slot]; all rows must have the same nonzero length.
  // Throws ValidationError on negative/non-finite weights, weights not
  // summing to 1 within kWeightTolerance, or responses other than +-1.
  static FiniteHVModel make(std::vector<double> weights,
                            std::vector<std::vector<Spin>> responses);

  std::size_t lambda_count() const noexcept { return weights_.size(); }
  std::size_t slot_count() const noexcept { return slots_; }
  double weight(std::size_t lambda) const { return weights_.at(lambda); }
  Spin response(std::size_t lambda, std::size_t slot) const {
    return responses_.at(lambda * slots_ + slot);
  }

  // Smallest lambda whose cumulative weight exceeds u.
  std::size_t sample_lambda(double u) const;

  friend bool operator==(const FiniteHVModel&, const FiniteHVModel&) = default;

 private:
  FiniteHVModel() = default;

  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<Spin> responses_;
  std::size_t slots_ = 0;
};

// lambda uniform on the unit sphere, S(lambda, slot) = sign(lambda . dir(slot)),
// with sign(0) = +1. Continuous: only sampling is supported.
class SignHVModel {
 public:
  explicit SignHVModel(std::vector<Direction3> slot_directions);

  std::size_t slot_count() const noexcept { return directions_.size(); }
  const std::vector<Direction3>& directions() const noexcept { return directions_; }

  static std::array<double, 3> sample_lambda(double u1, double u2);
  Spin response(const std::array<double, 3>& lambda, std::size_t slot) const;

 private:
  std::vector<Direction3> directions_;
};

class HVModel {
 public:
  HVModel(FiniteHVModel model) : model_(std::move(model)) {}  // NOLINT(implicit)
  HVModel(SignHVModel model) : model_(std::move(model)) {}    // NOLINT(implicit)

  bool is_finite() const noexcept { return std::holds_alternative<FiniteHVModel>(model_); }
  const FiniteHVModel& finite() const;
  std::size_t slot_count() const noexcept;
  std::string_view kind_name() const noexcept { return is_finite() ? "finite" : "sign"; }

  const std::variant<FiniteHVModel, SignHVModel>& variant() const noexcept { return model_; }

 private:
  std::variant<FiniteHVModel, SignHVModel> model_;
};

// One lambda per trial feeds both measurements. Finite models use u1 only;
// the sign model uses (u1, u2) to place lambda on the sphere.
OutcomePair hv_trial(const HVModel& model, const MeasurementContext& context,
                     double u1, double u2);

struct TemporalCorrelators {
  double ab;
  double ac;
  double bc;
};

struct ChshCorrelators {
  double ab;
  double ab_prime;
  double a_prime_b;
  double a_prime_b_prime;
};

// Which model slot plays each inequality role. The defaults are the
// experiment's own binding; other assignments re-bind the roles.
struct TemporalRoles {
  std::size_t a = 0;
  std::size_t b = 1;
  std::size_t c = 2;
};

struct ChshRoles {
  std::size_t a = 0;
  std::size_t a_prime = 1;
  std::size_t b = 2;
  std::size_t b_prime = 3;
};

// sum over lambda of rho(lambda) S(lambda, slot_x) S(lambda, slot_y).
// Throws UnsupportedOperationError for continuous models.
double exact_correlator(const HVModel& model, std::size_t slot_x, std::size_t slot_y);
TemporalCorrelators exact_correlators(const HVModel& model, TemporalRoles roles = {});
ChshCorrelators exact_chsh_correlators(const HVModel& model, ChshRoles roles = {});

// |P(a,b) - P(a,c)| + P(b,c); at most 1 for any non-contextual model.
double temporal_bell_value(const TemporalCorrelators& p) noexcept;
// |P(a,b) - P(a,b')| + |P(a',b') + P(a',b)|; at most 2 for any local model.
double chsh_value(const ChshCorrelators& p) noexcept;

// 1 - 2 theta / pi, theta the angle between x and y.
double sign_model_correlator(const Direction3& x, const Direction3& y);

// Single lambda answering +1 in every slot.
FiniteHVModel constant_model(std::size_t slots);

// Random nonnegative normalized weights and random +-1 tables, reproducible
// from seed. Throws ValidationError if n_lambda or n_slots is 0.
FiniteHVModel random_finite_model(std::uint64_t seed, std::size_t n_lambda,
                                  std::size_t n_slots = 3);

class ContextualHVModel {
 public:
  // Draws (s1, s2) with probability (1 + s1 s2 x.y) / 4 for the context's
  // directions (x, y): lambda is the outcome pair itself.
  static ContextualHVModel qm_mimic(ExperimentKind kind,
                                    std::vector<Direction3> slot_directions);
  // One finite model (distribution + responses) per context, indexed like
  // MeasurementContext::index.
  static ContextualHVModel from_tables(ExperimentKind kind,
                                       std::vector<FiniteHVModel> per_context);

  ExperimentKind kind() const noexcept { return kind_; }
  bool is_qm_mimic() const noexcept { return per_context_.empty(); }
  const std::vector<FiniteHVModel>& tables() const noexcept { return per_context_; }

  // Exact conditional branching of the qm-mimic sampler for one context.
  BranchProbabilities mimic_branching(const MeasurementContext& context) const;

  // Exact correlator of one context.
  double exact_correlator(const MeasurementContext& context) const;

 private:
  ContextualHVModel() = default;

  ExperimentKind kind_ = ExperimentKind::kTemporal;
  std::vector<Direction3> directions_;
  std::vector<FiniteHVModel> per_context_;
};

OutcomePair conspiracy_trial(const ContextualHVModel& model,
                             const MeasurementContext& context, double u1, double u2);

// JSON model files.
//   finite:     {"lambdas": [{"weight": w, "responses": [+-1, ...]}, ...]}
//   contextual: {"ab": <finite>, "ac": <finite>, "bc": <finite>} for temporal
//               experiments, keys "ab", "ab'", "a'b", "a'b'" for CHSH.
FiniteHVModel finite_model_from_json(std::string_view text);
ContextualHVModel contextual_model_from_json(std::string_view text, ExperimentKind kind);
std::string finite_model_to_json(const FiniteHVModel& model);

FiniteHVModel load_finite_model(const std::filesystem::path& path);
ContextualHVModel load_contextual_model(const std::filesystem::path& path,
                                        ExperimentKind kind);

}  // namespace belltime
