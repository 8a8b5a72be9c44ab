#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "belltime/errors.hpp"
#include "belltime/hidden_variables.hpp"
#include "test_support.hpp"

namespace belltime {
namespace {

constexpr double kTol = 1e-12;
const MeasurementContext kAB{ExperimentKind::kTemporal, 0};
const MeasurementContext kAC{ExperimentKind::kTemporal, 1};
const MeasurementContext kBC{ExperimentKind::kTemporal, 2};

TEST(FiniteHVModel, Validation) {
  EXPECT_THROW(FiniteHVModel::make({0.5, 0.4}, {{1, 1, 1}, {1, 1, 1}}), ValidationError);
  EXPECT_THROW(FiniteHVModel::make({1.5, -0.5}, {{1, 1, 1}, {1, 1, 1}}), ValidationError);
  EXPECT_THROW(FiniteHVModel::make({1.0}, {{1, 0, 1}}), ValidationError);
  EXPECT_THROW(FiniteHVModel::make({0.5, 0.5}, {{1, 1, 1}, {1, 1}}), ValidationError);
  EXPECT_THROW(FiniteHVModel::make({1.0}, {{1, 1, 1}, {1, 1, 1}}), ValidationError);
  EXPECT_NO_THROW(FiniteHVModel::make({0.25, 0.75}, {{1, -1, 1}, {-1, -1, 1}}));
}

TEST(FiniteHVModel, ConstantModel) {
  const HVModel model = constant_model(3);
  for (std::uint8_t c = 0; c < 3; ++c) {
    const auto out = hv_trial(model, {ExperimentKind::kTemporal, c}, 0.37, 0.9);
    EXPECT_EQ(out.first, 1);
    EXPECT_EQ(out.second, 1);
  }
  const auto p = exact_correlators(model);
  EXPECT_EQ(p.ab, 1.0);
  EXPECT_EQ(p.ac, 1.0);
  EXPECT_EQ(p.bc, 1.0);
  EXPECT_EQ(temporal_bell_value(p), 1.0);
}

TEST(FiniteHVModel, AntiAlignedTable) {
  const HVModel model = FiniteHVModel::make({1.0}, {{1, -1, -1}});
  const auto p = exact_correlators(model);
  EXPECT_EQ(p.ab, -1.0);
  EXPECT_EQ(p.ac, -1.0);
  EXPECT_EQ(p.bc, 1.0);
  const auto out = hv_trial(model, kAB, 0.5, 0.5);
  EXPECT_EQ(out.first, 1);
  EXPECT_EQ(out.second, -1);
}

TEST(FiniteHVModel, TwoEquiprobableLambdas) {
  const HVModel model = FiniteHVModel::make({0.5, 0.5}, {{1, 1, 1}, {1, -1, -1}});
  const auto p = exact_correlators(model);
  EXPECT_NEAR(p.ab, 0.0, kTol);
  EXPECT_NEAR(p.ac, 0.0, kTol);
  EXPECT_NEAR(p.bc, 1.0, kTol);
}

TEST(FiniteHVModel, SampleLambdaFollowsCumulativeWeights) {
  const auto model = FiniteHVModel::make({0.25, 0.0, 0.75}, {{1}, {1}, {-1}});
  EXPECT_EQ(model.sample_lambda(0.0), 0u);
  EXPECT_EQ(model.sample_lambda(0.2499), 0u);
  EXPECT_EQ(model.sample_lambda(0.25), 2u);
  EXPECT_EQ(model.sample_lambda(0.999), 2u);
}

TEST(FiniteHVModel, RandomModelsAreReproducible) {
  EXPECT_EQ(random_finite_model(5, 8), random_finite_model(5, 8));
  EXPECT_NE(random_finite_model(5, 8), random_finite_model(6, 8));
  EXPECT_THROW(random_finite_model(5, 0), ValidationError);
  const HVModel single = random_finite_model(9, 1);
  const auto p = exact_correlators(single);
  for (double v : {p.ab, p.ac, p.bc}) EXPECT_TRUE(v == 1.0 || v == -1.0);
}

TEST(FiniteHVModel, NeverViolatesEitherInequality) {
  std::mt19937_64 rng(31);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto n_lambda = 1 + seed % 16;
    const HVModel model = random_finite_model(seed, n_lambda, 4);
    for (int r = 0; r < 10; ++r) {
      const TemporalRoles t{rng() % 4, rng() % 4, rng() % 4};
      ASSERT_LE(temporal_bell_value(exact_correlators(model, t)), 1.0 + kTol);
      const ChshRoles c{rng() % 4, rng() % 4, rng() % 4, rng() % 4};
      ASSERT_LE(chsh_value(exact_chsh_correlators(model, c)), 2.0 + kTol);
    }
  }
}

TEST(FiniteHVModel, SampledCorrelatorsConverge) {
  const HVModel model = random_finite_model(77, 6);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kN = 40000;
  const std::array<double, 3> exact{exact_correlator(model, 0, 1), exact_correlator(model, 0, 2),
                                    exact_correlator(model, 1, 2)};
  for (std::uint8_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (int i = 0; i < kN; ++i) {
      const auto out = hv_trial(model, {ExperimentKind::kTemporal, c}, u(rng), u(rng));
      sum += out.first * out.second;
    }
    EXPECT_LE(std::abs(sum / kN - exact[c]), 4.0 / std::sqrt(kN));
  }
}

TEST(SignHVModel, AnalyticCorrelator) {
  const auto z = Direction3::unit_z();
  EXPECT_NEAR(sign_model_correlator(z, z), 1.0, kTol);
  EXPECT_NEAR(sign_model_correlator(z, -z), -1.0, kTol);
  EXPECT_NEAR(sign_model_correlator(z, Direction3::unit_x()), 0.0, kTol);
  const auto d = testing::temporal_max_directions();
  EXPECT_NEAR(sign_model_correlator(d[0], d[1]), 0.5, kTol);
  EXPECT_NEAR(sign_model_correlator(d[0], d[2]), -0.5, kTol);
  EXPECT_NEAR(sign_model_correlator(d[1], d[2]), 0.0, kTol);
}

TEST(SignHVModel, ExactEvaluationUnsupported) {
  const HVModel model = SignHVModel(testing::temporal_max_directions());
  EXPECT_FALSE(model.is_finite());
  EXPECT_THROW(exact_correlator(model, 0, 1), UnsupportedOperationError);
  EXPECT_THROW(model.finite(), UnsupportedOperationError);
}

TEST(SignHVModel, LambdaIsUniformOnSphere) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 3> mean{};
  constexpr int kN = 40000;
  for (int i = 0; i < kN; ++i) {
    const auto l = SignHVModel::sample_lambda(u(rng), u(rng));
    ASSERT_NEAR(l[0] * l[0] + l[1] * l[1] + l[2] * l[2], 1.0, 1e-12);
    for (int k = 0; k < 3; ++k) mean[k] += l[k] / kN;
  }
  // Each coordinate has variance 1/3.
  for (double m : mean) EXPECT_LE(std::abs(m), 4.0 / std::sqrt(3.0 * kN));
}

TEST(SignHVModel, MonteCarloMatchesAnalytic) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int pair = 0; pair < 3; ++pair) {
    const auto x = testing::random_direction(rng);
    const auto y = testing::random_direction(rng);
    const HVModel model = SignHVModel({x, y, Direction3::unit_z()});
    constexpr int kN = 40000;
    double sum = 0.0;
    for (int i = 0; i < kN; ++i) {
      const auto out = hv_trial(model, kAB, u(rng), u(rng));
      sum += out.first * out.second;
    }
    EXPECT_LE(std::abs(sum / kN - sign_model_correlator(x, y)), 4.0 / std::sqrt(kN));
  }
}

TEST(ContextualHVModel, QmMimicReproducesQuantumCorrelators) {
  const auto d = testing::temporal_max_directions();
  const auto model = ContextualHVModel::qm_mimic(ExperimentKind::kTemporal, d);
  const double pab = model.exact_correlator(kAB);
  const double pac = model.exact_correlator(kAC);
  const double pbc = model.exact_correlator(kBC);
  EXPECT_NEAR(pab, d[0].dot(d[1]), kTol);
  EXPECT_NEAR(pac, d[0].dot(d[2]), kTol);
  EXPECT_NEAR(pbc, 0.0, kTol);
  EXPECT_NEAR(temporal_bell_value({pab, pac, pbc}), std::sqrt(2.0), kTol);
}

TEST(ContextualHVModel, QmMimicAlignedIsPerfectlyCorrelated) {
  const auto z = Direction3::unit_z();
  const auto model = ContextualHVModel::qm_mimic(ExperimentKind::kTemporal, {z, z, z});
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto out = conspiracy_trial(model, kBC, u(rng), u(rng));
    ASSERT_EQ(out.first, out.second);
  }
}

TEST(ContextualHVModel, QmMimicJointDistribution) {
  std::mt19937_64 rng(36);
  const auto x = testing::random_direction(rng);
  const auto y = testing::random_direction(rng);
  const auto model =
      ContextualHVModel::qm_mimic(ExperimentKind::kTemporal, {x, y, Direction3::unit_z()});
  const auto br = model.mimic_branching(kAB);
  const double xy = x.dot(y);
  EXPECT_NEAR(br.first_plus * br.second_plus_after_plus, (1.0 + xy) / 4.0, kTol);
  EXPECT_NEAR(br.first_plus * (1.0 - br.second_plus_after_plus), (1.0 - xy) / 4.0, kTol);
  EXPECT_NEAR((1.0 - br.first_plus) * br.second_plus_after_minus, (1.0 - xy) / 4.0, kTol);
  EXPECT_NEAR((1.0 - br.first_plus) * (1.0 - br.second_plus_after_minus), (1.0 + xy) / 4.0,
              kTol);
}

TEST(ContextualHVModel, TablesPerContext) {
  const auto plus = FiniteHVModel::make({1.0}, {{1, 1, 1}});
  const auto anti = FiniteHVModel::make({1.0}, {{1, -1, -1}});
  const auto model = ContextualHVModel::from_tables(ExperimentKind::kTemporal, {plus, anti, plus});
  EXPECT_EQ(model.exact_correlator(kAB), 1.0);
  EXPECT_EQ(model.exact_correlator(kAC), -1.0);
  EXPECT_EQ(model.exact_correlator(kBC), 1.0);
  EXPECT_THROW(ContextualHVModel::from_tables(ExperimentKind::kTemporal, {plus, anti}),
               ValidationError);
}

TEST(ModelJson, FiniteRoundTrip) {
  const auto model = random_finite_model(3, 5);
  EXPECT_EQ(finite_model_from_json(finite_model_to_json(model)), model);
  const auto parsed = finite_model_from_json(
      R"({"lambdas": [{"weight": 0.5, "responses": [1, 1, 1]},
                      {"weight": 0.5, "responses": [1, -1, -1]}]})");
  EXPECT_EQ(parsed.lambda_count(), 2u);
  EXPECT_EQ(parsed.response(1, 2), -1);
}

TEST(ModelJson, FiniteRejectsBadInput) {
  EXPECT_THROW(finite_model_from_json("{"), ValidationError);
  EXPECT_THROW(finite_model_from_json(R"({"lambda": []})"), ValidationError);
  EXPECT_THROW(finite_model_from_json(R"({"lambdas": [{"weight": 1.0, "responses": [1, 2, 1]}]})"),
               ValidationError);
  EXPECT_THROW(finite_model_from_json(R"({"lambdas": [{"weight": 0.9, "responses": [1, 1, 1]}]})"),
               ValidationError);
}

TEST(ModelJson, Contextual) {
  const std::string block = R"({"lambdas": [{"weight": 1.0, "responses": [1, -1, 1]}]})";
  const auto model = contextual_model_from_json(
      R"({"ab": )" + block + R"(, "ac": )" + block + R"(, "bc": )" + block + "}",
      ExperimentKind::kTemporal);
  EXPECT_EQ(model.exact_correlator(kAB), -1.0);
  EXPECT_EQ(model.exact_correlator(kAC), 1.0);
  EXPECT_THROW(contextual_model_from_json(R"({"ab": )" + block + "}", ExperimentKind::kTemporal),
               ValidationError);
}

}  // namespace
}  // namespace belltime
