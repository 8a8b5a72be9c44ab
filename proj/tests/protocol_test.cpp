#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "belltime/errors.hpp"
#include "belltime/protocol.hpp"
#include "belltime/protocol_io.hpp"
#include "test_support.hpp"

namespace belltime {
namespace {

ExperimentConfig make_config(std::string_view mode, std::uint64_t n, std::uint64_t selector_seed = 1,
                             std::uint64_t outcome_seed = 2) {
  ExperimentConfig config;
  config.mode = BackendSpec::parse(mode);
  config.n_trials = n;
  config.selector_seed = selector_seed;
  config.outcome_seed = outcome_seed;
  config.directions = config.mode.kind == BackendKind::kQmSinglet
                          ? testing::tsirelson_directions()
                          : testing::temporal_max_directions();
  return config;
}

RunOptions scalar_options(unsigned threads = 1) {
  RunOptions options;
  options.threads = threads;
  options.simd = kernels::SimdLevel::kScalar;
  return options;
}

CorrelatorEstimates estimates_of(ExperimentKind kind, std::vector<double> means) {
  CorrelatorEstimates e;
  e.kind = kind;
  for (std::size_t i = 0; i < means.size(); ++i) {
    e.contexts.push_back({std::string(MeasurementContext{kind, static_cast<std::uint8_t>(i)}.tag()),
                          100, means[i], 0.0});
  }
  return e;
}

TEST(BackendSpec, ParseAndPrint) {
  EXPECT_EQ(BackendSpec::parse("qm_sequential").kind, BackendKind::kQmSequential);
  EXPECT_EQ(BackendSpec::parse("hv:sign").model, "sign");
  EXPECT_EQ(BackendSpec::parse("conspiracy:qm-mimic").kind, BackendKind::kConspiracy);
  EXPECT_EQ(BackendSpec::parse("hv:models/x.json").to_string(), "hv:models/x.json");
  EXPECT_THROW(BackendSpec::parse("qm"), ValidationError);
  EXPECT_THROW(BackendSpec::parse("hv:"), ValidationError);
}

TEST(ExperimentConfig, Validation) {
  auto config = make_config("qm_sequential", 0);
  EXPECT_THROW(config.validate(), ValidationError);
  config.n_trials = 10;
  EXPECT_NO_THROW(config.validate());
  config.directions.pop_back();
  EXPECT_THROW(config.validate(), ValidationError);
  auto singlet = make_config("qm_singlet", 10);
  singlet.directions.pop_back();
  EXPECT_THROW(singlet.validate(), ValidationError);
  auto bad_sigma = make_config("qm_sequential", 10);
  bad_sigma.sigma_threshold = 0.0;
  EXPECT_THROW(bad_sigma.validate(), ValidationError);
}

TEST(RunExperiment, ConstantModelAlwaysPlus) {
  const auto records = run_experiment(make_config("hv:constant", 5000), scalar_options());
  ASSERT_EQ(records.size(), 5000u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    ASSERT_EQ(records.first()[i], 1);
    ASSERT_EQ(records.second()[i], 1);
  }
  const auto report = analyze(records, "hv:constant");
  EXPECT_EQ(report.bell.value, 1.0);
  EXPECT_EQ(report.bell.verdict, Verdict::kConsistent);
}

TEST(RunExperiment, QmTemporalMeansNearAnalytic) {
  const auto records = run_experiment(make_config("qm_sequential", 300000), scalar_options());
  const auto est = estimate_correlators(records);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_LE(std::abs(est.at("AB").mean - h), 3.0 * est.at("AB").std_error);
  EXPECT_LE(std::abs(est.at("AC").mean + h), 3.0 * est.at("AC").std_error);
  EXPECT_LE(std::abs(est.at("BC").mean), 3.0 * est.at("BC").std_error);
}

TEST(RunExperiment, GoldenRegression) {
  // Frozen from the first execution; any change to the selector, streams or
  // samplers shows up here.
  const auto records = run_experiment(make_config("qm_sequential", 100000, 20240601, 777),
                                      scalar_options());
  const auto est = estimate_correlators(records);
  EXPECT_EQ(est.at("AB").n, 33526u);
  EXPECT_DOUBLE_EQ(est.at("AB").mean, 0.70757024398973933);
  EXPECT_DOUBLE_EQ(est.at("AC").mean, -0.70719198745022327);
  EXPECT_DOUBLE_EQ(est.at("BC").mean, 0.0072015843485566822);
  EXPECT_EQ(records_sha256(records),
            "956b51e2eeae86682a5b90237933ac2bbb0c34214c2178454aa278205ed3567e");
}

TEST(RunExperiment, DeterministicAcrossThreadsSimdAndPath) {
  for (std::string_view mode :
       {"qm_sequential", "qm_singlet", "hv:sign", "hv:constant", "conspiracy:qm-mimic"}) {
    const auto config = make_config(mode, 50001);
    RunOptions reference = scalar_options();
    reference.path = EvaluationPath::kPerTrial;
    const auto expected = run_experiment(config, reference);
    for (unsigned threads : {1u, 2u, 5u}) {
      for (auto level : {kernels::SimdLevel::kScalar, kernels::SimdLevel::kAvx2}) {
        if (!kernels::is_supported(level)) continue;
        for (auto path : {EvaluationPath::kBatched, EvaluationPath::kPerTrial}) {
          RunOptions options;
          options.threads = threads;
          options.simd = level;
          options.path = path;
          options.chunk_size = 4093;
          EXPECT_EQ(run_experiment(config, options), expected)
              << mode << " threads=" << threads << " simd=" << kernels::to_string(level);
        }
      }
    }
  }
}

TEST(RunExperiment, SelectorIndependentOfBackendAndOutcomeSeed) {
  const auto qm = run_experiment(make_config("qm_sequential", 20000, 9, 1), scalar_options());
  const auto hv = run_experiment(make_config("hv:sign", 20000, 9, 2), scalar_options());
  const auto mimic = run_experiment(make_config("conspiracy:qm-mimic", 20000, 9, 3), scalar_options());
  const std::vector<std::uint8_t> a(qm.contexts().begin(), qm.contexts().end());
  EXPECT_TRUE(std::ranges::equal(qm.contexts(), hv.contexts()));
  EXPECT_TRUE(std::ranges::equal(qm.contexts(), mimic.contexts()));
  EXPECT_EQ(a, generate_contexts(9, ExperimentKind::kTemporal, 20000));
}

TEST(RunExperiment, SelectorSeedDoesNotChangeTargets) {
  const auto t1 = analytic_targets(make_config("qm_sequential", 10, 1));
  const auto t2 = analytic_targets(make_config("qm_sequential", 10, 999));
  EXPECT_EQ(t1.correlators, t2.correlators);
}

TEST(RunExperiment, EstimatorConsistency) {
  struct Case {
    std::string_view mode;
    std::vector<double> target;
  };
  const double h = 1.0 / std::sqrt(2.0);
  const std::vector<Case> cases{{"qm_sequential", {h, -h, 0.0}},
                                {"qm_singlet", {-h, h, -h, -h}},
                                {"hv:sign", {0.5, -0.5, 0.0}},
                                {"conspiracy:qm-mimic", {h, -h, 0.0}}};
  for (const auto& c : cases) {
    int passing = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto records =
          run_experiment(make_config(c.mode, 100000, 1000 + seed, 5000 + seed), scalar_options());
      const auto est = estimate_correlators(records);
      bool ok = true;
      for (std::size_t k = 0; k < c.target.size(); ++k) {
        const auto& e = est.contexts[k];
        ok = ok && std::abs(e.mean - c.target[k]) <= 5.0 * e.std_error;
      }
      passing += ok ? 1 : 0;
    }
    EXPECT_GE(passing, 99) << c.mode;
  }
}

TEST(RunExperiment, DoublingTrialsSaturates) {
  const auto small = estimate_correlators(run_experiment(make_config("qm_sequential", 100000), scalar_options()));
  const auto large = estimate_correlators(run_experiment(make_config("qm_sequential", 200000), scalar_options()));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_LT(std::abs(small.contexts[k].mean - large.contexts[k].mean),
              3.0 * small.contexts[k].std_error);
  }
}

TEST(RunExperiment, WorkerExceptionsPropagate) {
  auto config = make_config("hv:does-not-exist.json", 10);
  EXPECT_THROW(run_experiment(config, scalar_options(2)), IoError);
}

TEST(EstimateCorrelators, DirectFormulas) {
  ExperimentRecords records(ExperimentKind::kTemporal);
  records.push_back(0, 1, 1);
  records.push_back(0, 1, -1);
  records.push_back(1, 1, 1);
  records.push_back(1, 1, 1);
  records.push_back(2, -1, 1);
  records.push_back(2, -1, 1);
  const auto est = estimate_correlators(records);
  EXPECT_EQ(est.at("AB").mean, 0.0);
  EXPECT_DOUBLE_EQ(est.at("AB").std_error, std::sqrt(0.5));
  EXPECT_EQ(est.at("AC").mean, 1.0);
  EXPECT_EQ(est.at("AC").std_error, 0.0);
  EXPECT_EQ(est.at("BC").mean, -1.0);
  EXPECT_THROW(est.at("AB'"), InsufficientDataError);
}

TEST(EstimateCorrelators, InsufficientData) {
  ExperimentRecords records(ExperimentKind::kTemporal);
  records.push_back(0, 1, 1);
  records.push_back(0, 1, 1);
  records.push_back(1, 1, 1);
  records.push_back(1, 1, 1);
  records.push_back(2, 1, 1);
  try {
    estimate_correlators(records);
    FAIL() << "expected InsufficientDataError";
  } catch (const InsufficientDataError& e) {
    EXPECT_NE(std::string(e.what()).find("BC"), std::string::npos);
  }
}

TEST(EstimateCorrelators, SimdLevelsAgree) {
  const auto records = run_experiment(make_config("qm_singlet", 100003), scalar_options());
  const auto ref = estimate_correlators(records, kernels::SimdLevel::kScalar);
  if (!kernels::is_supported(kernels::SimdLevel::kAvx2)) GTEST_SKIP();
  const auto avx = estimate_correlators(records, kernels::SimdLevel::kAvx2);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(ref.contexts[k].n, avx.contexts[k].n);
    EXPECT_EQ(ref.contexts[k].mean, avx.contexts[k].mean);
  }
}

TEST(Inequality, TemporalExamples) {
  const auto unit = bell_quantity(estimates_of(ExperimentKind::kTemporal, {1, 1, 1}));
  EXPECT_EQ(unit.value, 1.0);
  EXPECT_EQ(unit.verdict, Verdict::kConsistent);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(bell_quantity(estimates_of(ExperimentKind::kTemporal, {h, -h, 0})).value,
              std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(bell_quantity(estimates_of(ExperimentKind::kTemporal, {0.5, -0.5, 0})).value, 1.0,
              1e-12);
  EXPECT_EQ(bell_quantity(estimates_of(ExperimentKind::kTemporal, {h, -h, 0})).verdict,
            Verdict::kViolation);
}

TEST(Inequality, ChshExamples) {
  const auto s = chsh_quantity(estimates_of(ExperimentKind::kChsh, {1, 1, 1, 1}));
  EXPECT_EQ(s.value, 2.0);
  EXPECT_EQ(s.bound, 2.0);
  EXPECT_EQ(s.verdict, Verdict::kConsistent);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(chsh_quantity(estimates_of(ExperimentKind::kChsh, {-h, h, -h, -h})).value,
              2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_THROW(chsh_quantity(estimates_of(ExperimentKind::kTemporal, {1, 1, 1})), ValidationError);
}

TEST(Inequality, ErrorsAddInQuadrature) {
  auto e = estimates_of(ExperimentKind::kTemporal, {0.5, -0.5, 0.2});
  e.contexts[0].std_error = 0.03;
  e.contexts[1].std_error = 0.04;
  e.contexts[2].std_error = 0.12;
  const auto r = bell_quantity(e);
  EXPECT_NEAR(r.std_error, 0.13, 1e-12);
  EXPECT_NEAR(r.sigma_excess, (1.2 - 1.0) / 0.13, 1e-12);
}

TEST(Verdict, TrichotomyIsExhaustiveAndExclusive) {
  EXPECT_EQ(classify(1.5, 1.0, 0.1, 5.0), Verdict::kViolation);
  EXPECT_EQ(classify(1.5, 1.0, 0.1, 5.0 + 1e-9), Verdict::kInconclusive);
  EXPECT_EQ(classify(1.2, 1.0, 0.1, 5.0), Verdict::kInconclusive);
  EXPECT_EQ(classify(1.0, 1.0, 0.1, 5.0), Verdict::kConsistent);
  EXPECT_EQ(classify(0.3, 1.0, 0.1, 5.0), Verdict::kConsistent);
  EXPECT_EQ(classify(1.0 + 1e-9, 1.0, 0.0, 5.0), Verdict::kViolation);
  EXPECT_THROW(classify(1.0, 1.0, -0.1, 5.0), ValidationError);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double value = u(rng), bound = u(rng), se = 0.01 + u(rng), k = 0.1 + u(rng);
    const Verdict v = classify(value, bound, se, k);
    const bool violation = (value - bound) / se >= k;
    const bool consistent = !violation && value <= bound;
    EXPECT_EQ(v == Verdict::kViolation, violation);
    EXPECT_EQ(v == Verdict::kConsistent, consistent);
    EXPECT_EQ(v == Verdict::kInconclusive, !violation && !consistent);
  }
  for (auto verdict : {Verdict::kViolation, Verdict::kConsistent, Verdict::kInconclusive}) {
    EXPECT_EQ(parse_verdict(to_string(verdict)), verdict);
  }
}

TEST(AnalyticTargets, Backends) {
  const double h = 1.0 / std::sqrt(2.0);
  const auto qm = analytic_targets(make_config("qm_sequential", 1));
  EXPECT_NEAR(qm.value, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(qm.correlators[0], h, 1e-12);
  const auto singlet = analytic_targets(make_config("qm_singlet", 1));
  EXPECT_NEAR(singlet.value, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_EQ(singlet.bound, 2.0);
  const auto sign = analytic_targets(make_config("hv:sign", 1));
  EXPECT_NEAR(sign.value, 1.0, 1e-12);
  const auto mimic = analytic_targets(make_config("conspiracy:qm-mimic", 1));
  EXPECT_NEAR(mimic.value, std::sqrt(2.0), 1e-12);
}

TEST(ConfigJson, MissingKeyIsNamed) {
  try {
    config_from_json(R"({"mode": "qm_sequential", "directions": [[1,0,0],[0,1,0],[0,0,1]],
                         "selector_seed": 1, "outcome_seed": 2})",
                     ".");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("n_trials"), std::string::npos);
  }
}

TEST(ConfigJson, SeedsAndRoundTrip) {
  const auto config = config_from_json(
      R"({"mode": "qm_singlet", "directions": [[1,0,0],[0,1,0],[0,0,1],[1,0,0]],
          "n_trials": 12, "selector_seed": "0xffffffffffffffff", "outcome_seed": "42",
          "sigma_threshold": 3})",
      ".");
  EXPECT_EQ(config.selector_seed, std::numeric_limits<std::uint64_t>::max());
  EXPECT_EQ(config.outcome_seed, 42u);
  EXPECT_EQ(config.sigma_threshold, 3.0);
  const auto again = config_from_json(config_to_json(config), ".");
  EXPECT_EQ(config_to_json(again), config_to_json(config));
  EXPECT_EQ(parse_seed("0x10"), 16u);
  EXPECT_FALSE(parse_seed("-1").has_value());
  EXPECT_FALSE(parse_seed("18446744073709551616").has_value());
}

TEST(ConfigJson, RejectsNonUnitDirection) {
  EXPECT_THROW(config_from_json(R"({"mode": "qm_sequential", "directions": [[1,1,0],[0,1,0],[0,0,1]],
                                    "n_trials": 1, "selector_seed": 1, "outcome_seed": 2})",
                                "."),
               ValidationError);
}

TEST(RecordsCsv, RoundTripAndHeader) {
  const auto records = run_experiment(make_config("qm_singlet", 1000), scalar_options());
  const auto csv = records_to_csv(records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kRecordsHeader);
  EXPECT_EQ(records_from_csv(csv), records);
  EXPECT_NE(csv.find("\n0,"), std::string::npos);
}

TEST(RecordsCsv, ErrorsCiteLine) {
  const std::string header = std::string(kRecordsHeader) + "\n";
  auto expect_line = [](const std::string& text, const std::string& needle) {
    try {
      records_from_csv(text);
      FAIL() << "expected ValidationError for " << text;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_line(header + "0,AB,t1,t2,1,1\n1,AC,t1,t3,1\n", "line 3");
  expect_line(header + "0,AB,t1,t2,1,2\n", "line 2");
  expect_line(header + "0,AB,t1,t2,1,1\n2,AB,t1,t2,1,1\n", "line 3");
  expect_line(header + "0,AB,t1,t3,1,1\n", "line 2");
  expect_line("trial,ctx\n", "line 1");
  expect_line("", "empty");
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ReportJson, RoundTrip) {
  const auto records = run_experiment(make_config("qm_sequential", 3000), scalar_options());
  const auto report = analyze(records, "qm_sequential");
  const auto parsed = report_from_json(report_to_json(report));
  EXPECT_EQ(parsed.backend, "qm_sequential");
  EXPECT_EQ(parsed.records_sha256, report.records_sha256);
  EXPECT_EQ(parsed.n_trials, 3000u);
  EXPECT_EQ(parsed.bell.verdict, report.bell.verdict);
  EXPECT_NEAR(parsed.bell.value, report.bell.value, 1e-11);
  EXPECT_EQ(report_to_json(parsed), report_to_json(report));
}

TEST(ReportJson, InfiniteSigmaSurvives) {
  const auto records = run_experiment(make_config("hv:constant", 300), scalar_options());
  const auto report = analyze(records, "hv:constant");
  const auto parsed = report_from_json(report_to_json(report));
  EXPECT_EQ(parsed.bell.std_error, 0.0);
  EXPECT_EQ(report_to_json(parsed), report_to_json(report));
}

TEST(RoundSignificant, TwelveDigits) {
  EXPECT_EQ(round_significant(1.0 / 3.0), 0.333333333333);
  EXPECT_EQ(round_significant(std::sqrt(2.0)), 1.41421356237);
}

}  // namespace
}  // namespace belltime
