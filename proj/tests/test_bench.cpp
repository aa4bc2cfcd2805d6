#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "glds/bench/config.hpp"
#include "glds/bench/csv.hpp"
#include "glds/bench/generators.hpp"
#include "glds/bench/runners.hpp"
#include "glds/stability.hpp"
#include "glds/version.hpp"

using namespace glds;
using namespace glds::bench;
using Json = nlohmann::json;

namespace {

Json minimal_single_fit() {
  return Json{{"kind", "single_fit"},
              {"dims", {2}},
              {"n_grid", {64}},
              {"theta_gen", {{"kind", "spectral"}, {"scale", 0.5}}},
              {"m", 10}};
}

Json small_sweep() {
  return Json{{"kind", "rate_sweep"},
              {"dims", {2, 3}},
              {"n_grid", {64, 128}},
              {"trials", 2},
              {"link", {{"kind", "leaky_relu"}, {"beta", 0.5}}},
              {"theta_gen", {{"kind", "spectral"}, {"scale", 0.6}}},
              {"noise", {{"kind", "gaussian"}, {"tau", 1.0}}},
              {"regime", "practical"},
              {"m", 50},
              {"seed", 17}};
}

ExperimentSpec parse(const Json& j) { return parse_experiment_spec(j.dump()); }

void expect_config_error(const Json& j, const std::string& needle) {
  try {
    parse(j);
    FAIL() << "expected ConfigError containing '" << needle << "'";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << "actual message: " << e.what();
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    lines.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace

TEST(ConfigParsing, RoundTripsFullRateSweepSpec) {
  Json j = small_sweep();
  j["option"] = "uniform";
  j["record_history"] = true;
  j["theory_step"] = false;
  j["w_bound"] = 2.5;
  j["delta"] = 0.1;
  j["output_path"] = "/tmp/x.csv";

  const ExperimentSpec spec = parse(j);
  EXPECT_EQ(spec.kind, ExperimentKind::rate_sweep);
  EXPECT_EQ(spec.dims, (std::vector<int>{2, 3}));
  EXPECT_EQ(spec.n_grid, (std::vector<int>{64, 128}));
  EXPECT_EQ(spec.trials, 2);
  EXPECT_EQ(spec.link.kind, "leaky_relu");
  EXPECT_DOUBLE_EQ(spec.link.beta, 0.5);
  ASSERT_TRUE(spec.theta_gen.has_value());
  EXPECT_EQ(spec.theta_gen->kind, "spectral");
  EXPECT_DOUBLE_EQ(spec.theta_gen->scale, 0.6);
  EXPECT_EQ(spec.noise.kind, "gaussian");
  EXPECT_EQ(spec.regime, "practical");
  ASSERT_TRUE(spec.m.has_value());
  EXPECT_EQ(*spec.m, 50);
  EXPECT_EQ(spec.option, "uniform");
  EXPECT_EQ(spec.iterate_option(), IterateOption::uniform_random);
  EXPECT_TRUE(spec.record_history);
  EXPECT_DOUBLE_EQ(spec.w_bound, 2.5);
  EXPECT_DOUBLE_EQ(spec.delta, 0.1);
  EXPECT_EQ(spec.seed, 17u);
  EXPECT_EQ(spec.output_path, "/tmp/x.csv");
}

TEST(ConfigParsing, AppliesDocumentedDefaults) {
  const ExperimentSpec spec = parse(minimal_single_fit());
  EXPECT_EQ(spec.link.kind, "identity");
  EXPECT_EQ(spec.noise.kind, "gaussian");
  EXPECT_DOUBLE_EQ(spec.noise.tau, 1.0);
  EXPECT_EQ(spec.regime, "practical");
  EXPECT_EQ(spec.option, "last");
  EXPECT_EQ(spec.iterate_option(), IterateOption::last_iterate);
  EXPECT_EQ(spec.trials, 1);
  EXPECT_FALSE(spec.theory_step);
  EXPECT_FALSE(spec.record_history);
  EXPECT_DOUBLE_EQ(spec.w_bound, 1.0);
  EXPECT_DOUBLE_EQ(spec.delta, 0.05);
  EXPECT_EQ(spec.seed, 0u);
  EXPECT_TRUE(spec.output_path.empty());
}

TEST(ConfigParsing, RejectsUnknownKeysAtEveryLevel) {
  Json top = small_sweep();
  top["bogus"] = 1;
  expect_config_error(top, "bogus");

  Json link = small_sweep();
  link["link"]["slope"] = 0.2;
  expect_config_error(link, "slope");

  Json noise = small_sweep();
  noise["noise"]["sigma"] = 1.0;
  expect_config_error(noise, "sigma");

  Json gen = small_sweep();
  gen["theta_gen"]["radius"] = 0.5;
  expect_config_error(gen, "radius");

  Json lemma = Json{{"kind", "lemma_suite"}, {"dims", {2}}, {"lemma", {{"extra", 3}}}};
  expect_config_error(lemma, "extra");
}

TEST(ConfigParsing, RejectsMalformedInput) {
  EXPECT_THROW(parse_experiment_spec("{not json"), ConfigError);
  EXPECT_THROW(parse_experiment_spec("[1, 2]"), ConfigError);
  expect_config_error(Json{{"dims", {2}}}, "kind");
  expect_config_error(Json{{"kind", "warp"}, {"dims", {2}}}, "warp");
}

TEST(ConfigParsing, RejectsBadScalarsAndGrids) {
  Json j = small_sweep();
  j["n_grid"] = {64, 64};
  expect_config_error(j, "strictly increasing");

  j = small_sweep();
  j["n_grid"] = {128, 64};
  expect_config_error(j, "strictly increasing");

  j = small_sweep();
  j["dims"] = {3, 2};
  expect_config_error(j, "strictly increasing");

  j = small_sweep();
  j["dims"] = {0, 2};
  expect_config_error(j, "dims");

  j = small_sweep();
  j["trials"] = 0;
  expect_config_error(j, "trials");

  j = small_sweep();
  j["delta"] = 1.0;
  expect_config_error(j, "delta");

  j = small_sweep();
  j["w_bound"] = 0.0;
  expect_config_error(j, "w_bound");

  j = small_sweep();
  j["regime"] = "medium";
  expect_config_error(j, "regime");

  j = small_sweep();
  j["option"] = "best";
  expect_config_error(j, "option");

  j = small_sweep();
  j["m"] = 0;
  expect_config_error(j, "m must be >= 1");

  j = small_sweep();
  j["m"] = "many";
  expect_config_error(j, "bad value");
}

TEST(ConfigParsing, RejectsBadLinkAndNoise) {
  Json j = small_sweep();
  j["link"] = {{"kind", "leaky_relu"}, {"beta", 0.0}};
  expect_config_error(j, "link");

  j = small_sweep();
  j["link"] = {{"kind", "sigmoid"}};
  expect_config_error(j, "link");

  j = small_sweep();
  j["noise"] = {{"kind", "cauchy"}};
  expect_config_error(j, "noise");

  j = small_sweep();
  j["noise"] = {{"kind", "gaussian"}, {"tau", -1.0}};
  expect_config_error(j, "noise");
}

TEST(ConfigParsing, EnforcesThetaGeneratorRules) {
  Json j = small_sweep();
  j["theta_gen"] = {{"kind", "spectral"}, {"scale", 0.0}};
  expect_config_error(j, "scale");

  j = small_sweep();
  j["theta_gen"] = {{"kind", "spectral"}, {"matrix", {{1.0}}}};
  expect_config_error(j, "matrix");

  j = small_sweep();
  j["theta_gen"] = {{"kind", "explicit"}};
  expect_config_error(j, "matrix");

  j = small_sweep();
  j["theta_gen"] = {{"kind", "explicit"}, {"matrix", {{1.0, 2.0}}}};
  expect_config_error(j, "square");

  j = small_sweep();
  j["theta_gen"] = {{"kind", "rotation"}};
  expect_config_error(j, "theta_gen.kind");

  // An explicit matrix must match every requested dimension.
  j = small_sweep();
  j["dims"] = {2, 3};
  j["theta_gen"] = {{"kind", "explicit"}, {"matrix", {{0.5, 0.0}, {0.0, 0.5}}}};
  expect_config_error(j, "does not match dims");
}

TEST(ConfigParsing, EnforcesKindShapeRules) {
  Json j = minimal_single_fit();
  j["dims"] = {2, 3};
  j["theta_gen"] = {{"kind", "spectral"}, {"scale", 0.5}};
  expect_config_error(j, "exactly one");

  j = Json{{"kind", "certify"},
           {"dims", {2, 3}},
           {"theta_gen", {{"kind", "spectral"}, {"scale", 0.5}}}};
  expect_config_error(j, "exactly one");

  j = small_sweep();
  j.erase("theta_gen");
  expect_config_error(j, "theta_gen");

  j = Json{{"kind", "lemma_suite"}, {"dims", Json::array()}};
  expect_config_error(j, "nonempty dims");

  // The lemma suite needs no generator.
  EXPECT_NO_THROW(parse(Json{{"kind", "lemma_suite"}, {"dims", {2, 3}}}));

  j = small_sweep();
  j["n_grid"] = Json::array();
  expect_config_error(j, "nonempty");
}

TEST(ConfigParsing, PracticalRegimeRequiresExplicitUpdateCount) {
  Json j = small_sweep();
  j.erase("m");
  expect_config_error(j, "requires an explicit m");

  j = minimal_single_fit();
  j.erase("m");
  expect_config_error(j, "requires an explicit m");

  // Theory regimes derive m from the schedule, so no explicit m is needed.
  j = small_sweep();
  j.erase("m");
  j["regime"] = "slow";
  EXPECT_NO_THROW(parse(j));
}

TEST(ConfigParsing, ValidatesLemmaCounts) {
  Json j{{"kind", "lemma_suite"}, {"dims", {2}}, {"lemma", {{"gap_cases", 0}}}};
  expect_config_error(j, ">= 1");

  j = Json{{"kind", "lemma_suite"}, {"dims", {2}}, {"lemma", {{"shifted_samples", 5000}}}};
  expect_config_error(j, "shifted_samples");
}

TEST(CsvFormat, DoublesRoundTripThroughText) {
  for (double x : {1.0 / 3.0, 0.1, -2.5e-17, 1e-300, 1.7976931348623157e308,
                   123456789.123456789, 0.0, -1.0}) {
    const std::string text = format_double(x);
    EXPECT_EQ(std::strtod(text.c_str(), nullptr), x) << text;
  }
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_int(-42), "-42");
  EXPECT_EQ(format_bool(true), "1");
  EXPECT_EQ(format_bool(false), "0");
}

TEST(CsvFormat, TableRendersRowsWithUnixEndings) {
  CsvTable table({"a", "b"});
  table.add_row({"1", "x"});
  table.add_row({"2", "y"});
  EXPECT_EQ(table.to_string(), "a,b\n1,x\n2,y\n");
  EXPECT_EQ(table.row_count(), 2u);
  EXPECT_THROW(table.add_row({"only-one"}), std::logic_error);
}

TEST(CsvFormat, HashMatchesReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xdeadbeefULL), "00000000deadbeef");
}

TEST(CsvFormat, WritesAndReadsFilesVerbatim) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "glds_csv_roundtrip.txt").string();
  const std::string payload = "a,b\n1,2\n";
  write_text_file(path, payload);
  EXPECT_EQ(read_text_file(path), payload);
  std::filesystem::remove(path);
}

TEST(Generators, SpectralScalesToOperatorNormTarget) {
  for (int d : {2, 5, 8}) {
    Rng rng(derive_stream(99, d));
    ThetaGenSpec gen;
    gen.kind = "spectral";
    gen.scale = 0.7;
    const WeightMatrix theta = make_theta(gen, d, rng);
    EXPECT_NEAR(operator_norm(theta), 0.7, 1e-12);
  }
  Rng a(123), b(123);
  ThetaGenSpec gen;
  gen.kind = "spectral";
  gen.scale = 0.7;
  EXPECT_EQ((make_theta(gen, 4, a) - make_theta(gen, 4, b)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Generators, NonnegScalesToSpectralRadiusTarget) {
  for (int d : {2, 4, 7}) {
    Rng rng(derive_stream(7, d));
    ThetaGenSpec gen;
    gen.kind = "nonneg";
    gen.scale = 0.9;
    const WeightMatrix theta = make_theta(gen, d, rng);
    EXPECT_GE(theta.minCoeff(), 0.0);
    EXPECT_NEAR(spectral_radius(theta), 0.9, 1e-9);
  }
}

TEST(Generators, ExplicitReturnsLiteralMatrix) {
  Rng rng(0);
  ThetaGenSpec gen;
  gen.kind = "explicit";
  gen.matrix = {{0.0, 2.0}, {0.1, 0.0}};
  const WeightMatrix theta = make_theta(gen, 2, rng);
  EXPECT_DOUBLE_EQ(theta(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(theta(1, 0), 0.1);
}

TEST(RunnerHelpers, MedianHandlesOddEvenEmpty) {
  EXPECT_DOUBLE_EQ(glds::bench::detail::median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(glds::bench::detail::median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_TRUE(std::isnan(glds::bench::detail::median({})));
}

TEST(RunnerHelpers, SlopeRecoversExactLine) {
  std::vector<std::pair<double, double>> pts;
  for (double x : {1.0, 2.0, 4.0, 8.0}) pts.emplace_back(x, 3.0 - 2.0 * x);
  EXPECT_NEAR(glds::bench::detail::least_squares_slope(pts), -2.0, 1e-12);
  EXPECT_TRUE(std::isnan(glds::bench::detail::least_squares_slope({{1.0, 1.0}})));
}

TEST(RunnerHelpers, ParallelForVisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> visits(1000);
  glds::bench::detail::parallel_for(4, 1000, [&](std::int64_t i) {
    visits[static_cast<std::size_t>(i)].fetch_add(1);
  });
  for (const auto& v : visits) EXPECT_EQ(v.load(), 1);

  EXPECT_THROW(glds::bench::detail::parallel_for(
                   4, 100,
                   [](std::int64_t i) {
                     if (i == 57) throw std::runtime_error("boom");
                   }),
               std::runtime_error);
}

TEST(SimulateRunner, EmitsFullTrajectoryDeterministically) {
  Json j{{"kind", "simulate"},
         {"dims", {2}},
         {"n_grid", {5}},
         {"theta_gen", {{"kind", "spectral"}, {"scale", 0.5}}},
         {"seed", 3}};
  const ExperimentSpec spec = parse(j);
  const RunResult a = run_simulate(spec, spec.seed, 0x1234);
  const RunResult b = run_simulate(spec, spec.seed, 0x1234);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.meta, b.meta);

  const auto lines = split_lines(a.table);
  ASSERT_EQ(lines.size(), 8u);  // header + states x_0..x_6
  EXPECT_EQ(lines[0], "t,x0,x1");
  EXPECT_EQ(lines[1].substr(0, 4), "0,0,");

  const Json meta = Json::parse(a.meta);
  EXPECT_EQ(meta.at("version").get<std::string>(), std::string(kVersion));
  EXPECT_EQ(meta.at("master_seed").get<std::uint64_t>(), 3u);
  EXPECT_EQ(meta.at("config_hash").get<std::string>(), hex64(0x1234));
}

TEST(CertifyRunner, ReportsWeightedCertificateForCyclicSystem) {
  Json j{{"kind", "certify"},
         {"dims", {2}},
         {"theta_gen",
          {{"kind", "explicit"}, {"matrix", {{0.0, 2.0}, {0.1, 0.0}}}}}};
  const ExperimentSpec spec = parse(j);
  const Json out = Json::parse(run_certify(spec, 0, 0).table);
  EXPECT_TRUE(out.at("found").get<bool>());
  EXPECT_NEAR(out.at("certificate").at("rho").get<double>(), 0.2, 1e-9);
  EXPECT_NEAR(out.at("certificate").at("k_diag")[0].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(out.at("certificate").at("k_diag")[1].get<double>(), 20.0, 1e-6);
  EXPECT_NEAR(out.at("certificate").at("effective_radius").get<double>(), 26.25, 1e-6);
  EXPECT_TRUE(out.at("check").at("ok").get<bool>());
  EXPECT_DOUBLE_EQ(out.at("operator_norm").get<double>(), 2.0);
}

TEST(CertifyRunner, ReportsAbsenceForUnstableSystem) {
  Json j{{"kind", "certify"},
         {"dims", {2}},
         {"theta_gen",
          {{"kind", "explicit"}, {"matrix", {{1.0, 1.0}, {-1.0, -1.0}}}}}};
  const ExperimentSpec spec = parse(j);
  const Json out = Json::parse(run_certify(spec, 0, 0).table);
  EXPECT_FALSE(out.at("found").get<bool>());
  EXPECT_FALSE(out.contains("certificate"));
}

TEST(SingleFitRunner, ReportsFullPipelineArtifacts) {
  Json j{{"kind", "single_fit"},
         {"dims", {2}},
         {"n_grid", {256}},
         {"link", {{"kind", "leaky_relu"}, {"beta", 0.5}}},
         {"theta_gen", {{"kind", "spectral"}, {"scale", 0.6}}},
         {"m", 150},
         {"w_bound", 2.0},
         {"record_history", true},
         {"seed", 21}};
  const ExperimentSpec spec = parse(j);
  const RunResult a = run_single_fit(spec, spec.seed, 0);
  EXPECT_EQ(a.table, run_single_fit(spec, spec.seed, 0).table);

  const Json out = Json::parse(a.table);
  for (const char* key :
       {"theta_star", "certificate", "fit", "isometry", "cross_term"}) {
    EXPECT_TRUE(out.contains(key)) << key;
  }
  const Json& fit = out.at("fit");
  EXPECT_EQ(fit.at("m").get<int>(), 150);
  EXPECT_EQ(fit.at("chosen_iterate").get<int>(), 151);
  EXPECT_EQ(fit.at("history").size(), 150u);
  EXPECT_GE(fit.at("param_err_sq").get<double>(), 0.0);
  EXPECT_TRUE(std::isfinite(fit.at("pred_err").get<double>()));
  EXPECT_GT(out.at("cross_term").at("mu_bound").get<double>(), 0.0);
}

TEST(SingleFitRunner, FailsWhenSystemCannotBeCertified) {
  Json j{{"kind", "single_fit"},
         {"dims", {2}},
         {"n_grid", {64}},
         {"link", {{"kind", "relu"}}},
         {"theta_gen",
          {{"kind", "explicit"}, {"matrix", {{1.0, 1.0}, {-1.0, -1.0}}}}},
         {"m", 10}};
  const ExperimentSpec spec = parse(j);
  EXPECT_THROW(run_single_fit(spec, 0, 0), RunFailure);
}

TEST(RateSweepRunner, EmitsCanonicalOrderAndSlopes) {
  const ExperimentSpec spec = parse(small_sweep());
  const RunResult a = run_rate_sweep(spec, spec.seed, 0, 1);
  const RunResult b = run_rate_sweep(spec, spec.seed, 0, 3);
  EXPECT_EQ(a.table, b.table);  // thread count must not affect output
  EXPECT_EQ(a.meta, b.meta);
  EXPECT_TRUE(a.warnings.empty());

  const auto lines = split_lines(a.table);
  ASSERT_EQ(lines.size(), 1u + 2 * 2 * 2);
  EXPECT_EQ(lines[0], "d,n,seed,link_kind,rho,R,param_err_sq,pred_err,iterations");
  std::vector<std::vector<int>> keys;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    int d = 0, n = 0, seed = 0;
    ASSERT_EQ(std::sscanf(lines[i].c_str(), "%d,%d,%d", &d, &n, &seed), 3);
    keys.push_back({d, n, seed});
  }
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_EQ(keys.front(), (std::vector<int>{2, 64, 0}));
  EXPECT_EQ(keys.back(), (std::vector<int>{3, 128, 1}));

  const Json meta = Json::parse(a.meta);
  EXPECT_EQ(meta.at("cells_total").get<int>(), 8);
  EXPECT_EQ(meta.at("cells_skipped").get<int>(), 0);
  EXPECT_TRUE(meta.at("slopes").contains("2"));
  EXPECT_TRUE(meta.at("slopes").contains("3"));

  const auto timing_lines = split_lines(a.timing);
  EXPECT_EQ(timing_lines.size(), lines.size());
  EXPECT_EQ(timing_lines[0], "d,n,seed,wall_time_seconds");
}

TEST(RateSweepRunner, FailsWhenMostCellsSkip) {
  Json j{{"kind", "rate_sweep"},
         {"dims", {2}},
         {"n_grid", {64, 128}},
         {"trials", 3},
         {"link", {{"kind", "relu"}}},
         {"theta_gen",
          {{"kind", "explicit"}, {"matrix", {{1.0, 1.0}, {-1.0, -1.0}}}}},
         {"m", 10}};
  const ExperimentSpec spec = parse(j);
  EXPECT_THROW(run_rate_sweep(spec, 0, 0, 1), RunFailure);
}

TEST(RateSweepRunner, TheoryRegimeDerivesUpdateCount) {
  Json j = small_sweep();
  j.erase("m");
  j["dims"] = {2};
  j["n_grid"] = {64};
  j["trials"] = 1;
  j["regime"] = "slow";
  const ExperimentSpec spec = parse(j);
  const RunResult r = run_rate_sweep(spec, spec.seed, 0, 1);
  const auto lines = split_lines(r.table);
  ASSERT_EQ(lines.size(), 2u);
  long long iterations = 0;
  ASSERT_EQ(std::sscanf(lines[1].c_str(), "%*d,%*d,%*d,%*[^,],%*f,%*f,%*f,%*f,%lld",
                        &iterations),
            1);
  EXPECT_GE(iterations, 1);
}

TEST(RateSweepRunner, RefusesRunawayTheorySchedules) {
  // The weighted radius of this system makes the relu-regime update count
  // astronomically large; the runner must refuse rather than hang.
  Json j{{"kind", "rate_sweep"},
         {"dims", {2}},
         {"n_grid", {64}},
         {"trials", 1},
         {"link", {{"kind", "relu"}}},
         {"theta_gen",
          {{"kind", "explicit"}, {"matrix", {{0.0, 2.0}, {0.1, 0.0}}}}},
         {"regime", "relu"}};
  const ExperimentSpec spec = parse(j);
  EXPECT_THROW(run_rate_sweep(spec, 0, 0, 1), RunFailure);
}

TEST(RateSweepRunner, RejectsScheduleIncompatibleWithLink) {
  Json j = small_sweep();
  j.erase("m");
  j["regime"] = "fast";
  j["link"] = {{"kind", "relu"}};  // zero slope bound, fast schedule undefined
  const ExperimentSpec spec = parse(j);
  EXPECT_THROW(run_rate_sweep(spec, 0, 0, 1), ConfigError);
}

TEST(IsometryRunner, ZeroSystemSatisfiesBothBounds) {
  Json j{{"kind", "isometry_trials"},
         {"dims", {2}},
         {"n_grid", {512}},
         {"trials", 3},
         {"theta_gen", {{"kind", "explicit"}, {"matrix", {{0.0, 0.0}, {0.0, 0.0}}}}},
         {"seed", 4}};
  const ExperimentSpec spec = parse(j);
  const RunResult a = run_isometry_trials(spec, spec.seed, 0, 1);
  EXPECT_EQ(a.table, run_isometry_trials(spec, spec.seed, 0, 2).table);

  const auto lines = split_lines(a.table);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "d,n,trial,lambda_min,lambda_max,lower_ok,upper_ok,rho,R");

  const Json meta = Json::parse(a.meta);
  ASSERT_EQ(meta.at("fractions").size(), 1u);
  EXPECT_DOUBLE_EQ(meta.at("fractions")[0].at("lower_frac").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(meta.at("fractions")[0].at("upper_frac").get<double>(), 1.0);
  EXPECT_EQ(meta.at("fractions")[0].at("trials").get<int>(), 3);
}

TEST(LemmaSuiteRunner, SmallSuitePassesWithPinnedSpecialRows) {
  Json j{{"kind", "lemma_suite"},
         {"dims", {2, 3}},
         {"seed", 12},
         {"lemma",
          {{"arccos_pairs", 2},
           {"arccos_samples", 40000},
           {"gap_cases", 2},
           {"gap_samples", 20000},
           {"shifted_cases", 1},
           {"shifted_samples", 10000},
           {"trig_pairs", 3}}}};
  const ExperimentSpec spec = parse(j);
  const RunResult a = run_lemma_suite(spec, spec.seed, 0, 1);
  EXPECT_EQ(a.table, run_lemma_suite(spec, spec.seed, 0, 2).table);
  EXPECT_TRUE(a.checks_passed);

  const auto lines = split_lines(a.table);
  // Families contribute count + specials: (2+2) + (2+2) + (1+1) + (3+2).
  ASSERT_EQ(lines.size(), 1u + 4 + 4 + 2 + 5);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_EQ(lines[i].back(), '1') << lines[i];
  }

  // The orthogonal-unit-vector trig row attains equality at 1/2.
  bool found_equality_row = false;
  for (const auto& line : lines) {
    if (line.rfind("trig_bound,1,", 0) == 0) {
      double lhs = 0.0, rhs = 0.0;
      ASSERT_EQ(std::sscanf(line.c_str(), "trig_bound,1,%*d,%lf,%lf", &lhs, &rhs), 2);
      EXPECT_DOUBLE_EQ(lhs, 0.5);
      EXPECT_DOUBLE_EQ(rhs, 0.5);
      found_equality_row = true;
    }
  }
  EXPECT_TRUE(found_equality_row);

  const Json meta = Json::parse(a.meta);
  EXPECT_TRUE(meta.at("all_pass").get<bool>());
  EXPECT_EQ(meta.at("families").at("gap_bound").at("total").get<int>(), 4);
}
