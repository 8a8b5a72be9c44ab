#include "belltime/hidden_variables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "belltime/errors.hpp"
#include "belltime/splitmix.hpp"
#include "file_util.hpp"

namespace belltime {
namespace {

using nlohmann::json;

void check_slot(std::size_t slot, std::size_t slots) {
  if (slot >= slots) {
    throw ValidationError("slot " + std::to_string(slot) + " out of range for a model with " +
                          std::to_string(slots) + " slots");
  }
}

Spin threshold(double u, double p_plus) { return u < p_plus ? 1 : -1; }

FiniteHVModel finite_model_from(const json& doc, const std::string& where) {
  if (!doc.is_object() || !doc.contains("lambdas") || !doc["lambdas"].is_array()) {
    throw ValidationError(where + ": expected an object with a 'lambdas' array");
  }
  std::vector<double> weights;
  std::vector<std::vector<Spin>> responses;
  std::size_t i = 0;
  for (const auto& entry : doc["lambdas"]) {
    const std::string item = where + ".lambdas[" + std::to_string(i++) + "]";
    if (!entry.is_object() || !entry.contains("weight") || !entry["weight"].is_number()) {
      throw ValidationError(item + ": missing numeric 'weight'");
    }
    if (!entry.contains("responses") || !entry["responses"].is_array()) {
      throw ValidationError(item + ": missing 'responses' array");
    }
    weights.push_back(entry["weight"].get<double>());
    std::vector<Spin> row;
    for (const auto& r : entry["responses"]) {
      if (!r.is_number_integer()) {
        throw ValidationError(item + ": responses must be the integers +1 or -1");
      }
      row.push_back(r.get<int>());
    }
    responses.push_back(std::move(row));
  }
  try {
    return FiniteHVModel::make(std::move(weights), std::move(responses));
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": malformed JSON (" + e.what() + ")");
  }
}

std::string contextual_key(const MeasurementContext& context) {
  std::string key(context.tag());
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return key;
}

}  // namespace

FiniteHVModel FiniteHVModel::make(std::vector<double> weights,
                                  std::vector<std::vector<Spin>> responses) {
  if (weights.empty()) throw ValidationError("model has no lambda values");
  if (weights.size() != responses.size()) {
    throw ValidationError("weights and response tables differ in length");
  }
  const std::size_t slots = responses.front().size();
  if (slots == 0) throw ValidationError("response table has no slots");

  FiniteHVModel model;
  model.slots_ = slots;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("weight of lambda " + std::to_string(i) +
                            " is negative or not finite");
    }
    if (responses[i].size() != slots) {
      throw ValidationError("response table of lambda " + std::to_string(i) + " has " +
                            std::to_string(responses[i].size()) + " slots, expected " +
                            std::to_string(slots));
    }
    for (Spin s : responses[i]) {
      if (s != 1 && s != -1) {
        throw ValidationError("response of lambda " + std::to_string(i) + " is not +-1");
      }
      model.responses_.push_back(s);
    }
    total += w;
    model.cumulative_.push_back(total);
  }
  if (!(std::abs(total - 1.0) <= kWeightTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights sum to " << total << ", not 1";
    throw ValidationError(msg.str());
  }
  model.weights_ = std::move(weights);
  return model;
}

std::size_t FiniteHVModel::sample_lambda(double u) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it != cumulative_.end()) return static_cast<std::size_t>(it - cumulative_.begin());
  // u beyond a total that rounded slightly below 1: last lambda with weight.
  for (std::size_t i = weights_.size(); i-- > 0;) {
    if (weights_[i] > 0.0) return i;
  }
  return weights_.size() - 1;
}

SignHVModel::SignHVModel(std::vector<Direction3> slot_directions)
    : directions_(std::move(slot_directions)) {
  if (directions_.empty()) throw ValidationError("sign model needs at least one direction");
}

std::array<double, 3> SignHVModel::sample_lambda(double u1, double u2) {
  const double z = 1.0 - 2.0 * u1;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Spin SignHVModel::response(const std::array<double, 3>& lambda, std::size_t slot) const {
  check_slot(slot, directions_.size());
  const Direction3& d = directions_[slot];
  const double projection = lambda[0] * d.x() + lambda[1] * d.y() + lambda[2] * d.z();
  return projection >= 0.0 ? 1 : -1;
}

const FiniteHVModel& HVModel::finite() const {
  if (const auto* m = std::get_if<FiniteHVModel>(&model_)) return *m;
  throw UnsupportedOperationError("exact evaluation requires a finite lambda space");
}

std::size_t HVModel::slot_count() const noexcept {
  return std::visit([](const auto& m) { return m.slot_count(); }, model_);
}

OutcomePair hv_trial(const HVModel& model, const MeasurementContext& context,
                     double u1, double u2) {
  const auto [x, y] = context.slots();
  check_slot(std::max(x, y), model.slot_count());
  if (model.is_finite()) {
    const FiniteHVModel& m = model.finite();
    const std::size_t lambda = m.sample_lambda(u1);
    return {m.response(lambda, x), m.response(lambda, y)};
  }
  const auto& m = std::get<SignHVModel>(model.variant());
  const auto lambda = SignHVModel::sample_lambda(u1, u2);
  return {m.response(lambda, x), m.response(lambda, y)};
}

double exact_correlator(const HVModel& model, std::size_t slot_x, std::size_t slot_y) {
  const FiniteHVModel& m = model.finite();
  check_slot(std::max(slot_x, slot_y), m.slot_count());
  double sum = 0.0;
  for (std::size_t l = 0; l < m.lambda_count(); ++l) {
    sum += m.weight(l) * m.response(l, slot_x) * m.response(l, slot_y);
  }
  return sum;
}

TemporalCorrelators exact_correlators(const HVModel& model, TemporalRoles roles) {
  return {exact_correlator(model, roles.a, roles.b), exact_correlator(model, roles.a, roles.c),
          exact_correlator(model, roles.b, roles.c)};
}

ChshCorrelators exact_chsh_correlators(const HVModel& model, ChshRoles roles) {
  return {exact_correlator(model, roles.a, roles.b),
          exact_correlator(model, roles.a, roles.b_prime),
          exact_correlator(model, roles.a_prime, roles.b),
          exact_correlator(model, roles.a_prime, roles.b_prime)};
}

double temporal_bell_value(const TemporalCorrelators& p) noexcept {
  return std::abs(p.ab - p.ac) + p.bc;
}

double chsh_value(const ChshCorrelators& p) noexcept {
  return std::abs(p.ab - p.ab_prime) + std::abs(p.a_prime_b_prime + p.a_prime_b);
}

double sign_model_correlator(const Direction3& x, const Direction3& y) {
  const double theta = std::acos(std::clamp(x.dot(y), -1.0, 1.0));
  return 1.0 - 2.0 * theta / std::numbers::pi;
}

FiniteHVModel constant_model(std::size_t slots) {
  return FiniteHVModel::make({1.0}, {std::vector<Spin>(slots, 1)});
}

FiniteHVModel random_finite_model(std::uint64_t seed, std::size_t n_lambda,
                                  std::size_t n_slots) {
  if (n_lambda == 0) throw ValidationError("n_lambda must be at least 1");
  if (n_slots == 0) throw ValidationError("n_slots must be at least 1");
  std::mt19937_64 engine(seed);
  std::vector<double> weights(n_lambda);
  std::vector<std::vector<Spin>> responses(n_lambda, std::vector<Spin>(n_slots));
  double total = 0.0;
  for (std::size_t l = 0; l < n_lambda; ++l) {
    // Raw engine bits keep the model identical across standard libraries.
    weights[l] = to_unit_interval(engine());
    total += weights[l];
    for (auto& s : responses[l]) s = (engine() >> 63) ? 1 : -1;
  }
  if (total == 0.0) {
    weights.assign(n_lambda, 0.0);
    weights[0] = 1.0;
  } else {
    for (auto& w : weights) w /= total;
  }
  return FiniteHVModel::make(std::move(weights), std::move(responses));
}

ContextualHVModel ContextualHVModel::qm_mimic(ExperimentKind kind,
                                              std::vector<Direction3> slot_directions) {
  if (slot_directions.size() != slot_count(kind)) {
    throw ValidationError("qm-mimic model needs " + std::to_string(slot_count(kind)) +
                          " directions for a " + std::string(to_string(kind)) +
                          " experiment");
  }
  ContextualHVModel model;
  model.kind_ = kind;
  model.directions_ = std::move(slot_directions);
  return model;
}

ContextualHVModel ContextualHVModel::from_tables(ExperimentKind kind,
                                                 std::vector<FiniteHVModel> per_context) {
  if (per_context.size() != context_count(kind)) {
    throw ValidationError("contextual model needs " + std::to_string(context_count(kind)) +
                          " per-context distributions");
  }
  for (std::size_t c = 0; c < per_context.size(); ++c) {
    const auto [x, y] = MeasurementContext{kind, static_cast<std::uint8_t>(c)}.slots();
    check_slot(std::max(x, y), per_context[c].slot_count());
  }
  ContextualHVModel model;
  model.kind_ = kind;
  model.per_context_ = std::move(per_context);
  return model;
}

BranchProbabilities ContextualHVModel::mimic_branching(const MeasurementContext& context) const {
  if (!is_qm_mimic()) throw UnsupportedOperationError("model is not the qm-mimic sampler");
  const auto [x, y] = context.slots();
  const double xy = directions_.at(x).dot(directions_.at(y));
  // P(s1 = +) = 1/2; P(s2 = + | s1) = (1 + s1 x.y) / 2.
  return {0.5, 0.5 * (1.0 + xy), 0.5 * (1.0 - xy)};
}

double ContextualHVModel::exact_correlator(const MeasurementContext& context) const {
  const auto [x, y] = context.slots();
  if (is_qm_mimic()) return directions_.at(x).dot(directions_.at(y));
  return belltime::exact_correlator(HVModel(per_context_.at(context.index)), x, y);
}

OutcomePair conspiracy_trial(const ContextualHVModel& model,
                             const MeasurementContext& context, double u1, double u2) {
  if (context.kind != model.kind()) {
    throw ValidationError("context kind does not match the contextual model");
  }
  if (model.is_qm_mimic()) {
    const BranchProbabilities p = model.mimic_branching(context);
    const Spin s1 = threshold(u1, p.first_plus);
    return {s1, threshold(u2, s1 > 0 ? p.second_plus_after_plus : p.second_plus_after_minus)};
  }
  const FiniteHVModel& table = model.tables().at(context.index);
  const auto [x, y] = context.slots();
  const std::size_t lambda = table.sample_lambda(u1);
  return {table.response(lambda, x), table.response(lambda, y)};
}

FiniteHVModel finite_model_from_json(std::string_view text) {
  return finite_model_from(parse_json(text, "model"), "model");
}

ContextualHVModel contextual_model_from_json(std::string_view text, ExperimentKind kind) {
  const json doc = parse_json(text, "contextual model");
  if (!doc.is_object()) throw ValidationError("contextual model: expected an object");
  std::vector<FiniteHVModel> tables;
  for (std::size_t c = 0; c < context_count(kind); ++c) {
    const std::string key =
        contextual_key(MeasurementContext{kind, static_cast<std::uint8_t>(c)});
    if (!doc.contains(key)) {
      throw ValidationError("contextual model: missing context block '" + key + "'");
    }
    tables.push_back(finite_model_from(doc[key], "contextual model." + key));
  }
  return ContextualHVModel::from_tables(kind, std::move(tables));
}

std::string finite_model_to_json(const FiniteHVModel& model) {
  json lambdas = json::array();
  for (std::size_t l = 0; l < model.lambda_count(); ++l) {
    json row = json::array();
    for (std::size_t s = 0; s < model.slot_count(); ++s) row.push_back(model.response(l, s));
    lambdas.push_back({{"weight", model.weight(l)}, {"responses", row}});
  }
  return json{{"lambdas", lambdas}}.dump(2) + "\n";
}

FiniteHVModel load_finite_model(const std::filesystem::path& path) {
  return finite_model_from_json(detail::read_text_file(path));
}

ContextualHVModel load_contextual_model(const std::filesystem::path& path,
                                        ExperimentKind kind) {
  return contextual_model_from_json(detail::read_text_file(path), kind);
}

}  // namespace belltime
