#include "becaus/error.hpp"
#include "becaus/examples.hpp"
#include "becaus/granger.hpp"
#include "becaus/rng.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

namespace becaus {
namespace {

TimeSeries row_series(const std::vector<double>& v) {
  TimeSeries s(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) s(0, i) = v[i];
  return s;
}

TimeSeries white_noise(Eigen::Index T, Rng& rng) {
  TimeSeries s(1, T);
  for (Eigen::Index t = 0; t < T; ++t) s(0, t) = rng.uniform(-1, 1);
  return s;
}

TimeSeries random_walk(Eigen::Index T, Rng& rng) {
  TimeSeries s(1, T);
  double acc = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) s(0, t) = acc += rng.normal();
  return s;
}

void expect_close(double actual, double expected, const std::string& what) {
  EXPECT_LE(std::abs(actual - expected), 1e-6 * std::max(1.0, std::abs(expected)))
      << what << ": " << actual << " vs " << expected;
}

nlohmann::json load_reference() {
  std::ifstream in(std::string(BECAUS_FIXTURE_DIR) + "/granger_reference.json");
  EXPECT_TRUE(in.good());
  return nlohmann::json::parse(in);
}

TEST(Fixtures, FStatisticsMatchReferenceImplementation) {
  const nlohmann::json ref = load_reference();
  ASSERT_EQ(ref["cases"].size(), 20u);
  for (const auto& c : ref["cases"]) {
    const TimeSeries cause = row_series(c["cause"].get<std::vector<double>>());
    const TimeSeries effect = row_series(c["effect"].get<std::vector<double>>());
    for (const auto& [lag_text, expected] : c["granger"].items()) {
      const int lag = std::stoi(lag_text);
      const GrangerResult r = granger_test(cause, effect, lag);
      const std::string tag = "case " + std::to_string(c["seed"].get<int>()) + " lag " + lag_text;
      expect_close(r.f_statistic, expected["f"], tag + " F");
      expect_close(r.p_value, expected["p"], tag + " p");
      EXPECT_EQ(r.df_den, expected["df_den"].get<int>()) << tag;
      EXPECT_EQ(r.df_num, expected["df_num"].get<int>()) << tag;
    }
  }
}

TEST(Fixtures, LagSelectionMatchesVarOrder) {
  const nlohmann::json ref = load_reference();
  for (const auto& c : ref["cases"]) {
    const TimeSeries cause = row_series(c["cause"].get<std::vector<double>>());
    const TimeSeries effect = row_series(c["effect"].get<std::vector<double>>());
    EXPECT_EQ(select_granger_lag(cause, effect, 5), c["var_bic_lag"].get<int>())
        << "case " << c["seed"].get<int>();
  }
}

TEST(Fixtures, AdfMatchesReferenceImplementation) {
  const nlohmann::json ref = load_reference();
  for (const auto& c : ref["cases"]) {
    for (const char* name : {"cause", "effect"}) {
      const auto& expected = c["adf"][name];
      const StationarityReport r = adf_test(row_series(c[name].get<std::vector<double>>()));
      const std::string tag = "case " + std::to_string(c["seed"].get<int>()) + " " + name;
      EXPECT_EQ(r.used_lag, expected["used_lag"].get<int>()) << tag;
      EXPECT_EQ(r.nobs, expected["nobs"].get<int>()) << tag;
      expect_close(r.adf_statistic, expected["statistic"], tag + " statistic");
      expect_close(r.p_value, expected["p"], tag + " p");
      for (int i = 0; i < 3; ++i) {
        expect_close(r.critical_values[i], expected["crit"][i], tag + " critical value");
      }
    }
  }
}

TEST(Adf, WhiteNoiseIsStationary) {
  Rng rng(1);
  int stationary = 0;
  for (int i = 0; i < 50; ++i) stationary += adf_test(white_noise(50, rng)).stationary;
  EXPECT_GE(stationary, 45);
}

TEST(Adf, RandomWalkIsNotStationary) {
  int nonstationary = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    nonstationary += !adf_test(random_walk(200, rng)).stationary;
  }
  EXPECT_GE(nonstationary, 90);
}

TEST(Adf, DifferencedRandomWalkIsStationary) {
  int stationary = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const TimeSeries w = random_walk(201, rng);
    TimeSeries d(1, 200);
    for (Eigen::Index t = 0; t < 200; ++t) d(0, t) = w(0, t + 1) - w(0, t);
    stationary += adf_test(d).stationary;
  }
  EXPECT_GE(stationary, 90);
}

TEST(Adf, ConstantSeriesIsDegenerate) {
  TimeSeries c(1, 50);
  c.values().setConstant(2.0);
  EXPECT_THROW(adf_test(c), DegenerateVarianceError);
}

TEST(Adf, LengthAndShapeChecks) {
  Rng rng(2);
  EXPECT_THROW(adf_test(white_noise(14, rng), 5), LengthError);
  EXPECT_THROW(adf_test(TimeSeries(2, 50)), DimensionError);
  EXPECT_EQ(default_adf_max_lag(50), 11);
  EXPECT_EQ(default_adf_max_lag(200), 15);
}

TEST(Adf, PValueTable) {
  EXPECT_EQ(adf_p_value(3.0), 1.0);
  EXPECT_EQ(adf_p_value(-20.0), 0.0);
  EXPECT_NEAR(adf_p_value(-2.86154), 0.05, 2e-3);
  const auto crit = adf_critical_values(1000000);
  EXPECT_NEAR(crit[1], -2.86154, 1e-4);
}

TEST(Granger, IdenticalSeriesIsRankDeficient) {
  Rng rng(3);
  const TimeSeries x = white_noise(60, rng);
  EXPECT_THROW(granger_test(x, x, 2), RankDeficientRegressionError);
  GrangerConfig cfg;
  cfg.lag = 2;
  cfg.difference_nonstationary = false;
  EXPECT_THROW(granger_screen(x, x, cfg), RankDeficientRegressionError);
}

TEST(Granger, PreconditionsOnLength) {
  Rng rng(4);
  const TimeSeries a = white_noise(20, rng), b = white_noise(20, rng);
  EXPECT_THROW(granger_test(a, b, 6), LengthError);
  EXPECT_NO_THROW(granger_test(a, b, 5));
  EXPECT_THROW(granger_test(a, TimeSeries(2, 20), 1), DimensionError);
}

TEST(Granger, DetectsDrivenSeries) {
  Rng rng(5);
  const TimeSeries u = white_noise(100, rng);
  TimeSeries y(1, 100);
  for (Eigen::Index t = 1; t < 100; ++t) {
    y(0, t) = 0.5 * y(0, t - 1) + u(0, t - 1) + 0.1 * rng.normal();
  }
  const GrangerResult fwd = granger_test(u, y, 1);
  EXPECT_TRUE(fwd.verdict);
  EXPECT_GT(fwd.f_statistic, 50.0);
  EXPECT_FALSE(granger_test(y, u, 1).verdict);
}

TEST(Granger, AffineRescalingInvariance) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const TimeSeries a = white_noise(80, rng);
    TimeSeries b(1, 80);
    for (Eigen::Index t = 1; t < 80; ++t) b(0, t) = 0.3 * a(0, t - 1) + rng.normal();
    const double sa = std::pow(10.0, rng.uniform(-3, 3)), sb = -std::pow(10.0, rng.uniform(-3, 3));
    TimeSeries a2(Matrix((sa * a.values()).array() + 5.0));
    TimeSeries b2(Matrix((sb * b.values()).array() - 2.0));
    for (int lag = 1; lag <= 3; ++lag) {
      const GrangerResult r1 = granger_test(a, b, lag);
      const GrangerResult r2 = granger_test(a2, b2, lag);
      EXPECT_EQ(r1.verdict, r2.verdict);
      EXPECT_LE(std::abs(r1.f_statistic - r2.f_statistic), 1e-9 * std::max(1.0, r1.f_statistic));
    }
  }
}

TEST(Granger, WhiteNoiseFalsePositiveRate) {
  int positives = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(seed, 40));
    positives += granger_test(white_noise(100, rng), white_noise(100, rng), 2).verdict;
  }
  EXPECT_GE(positives, 2);
  EXPECT_LE(positives, 8);
}

TEST(Granger, SelectedLagKeepsNominalSize) {
  int positives = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(derive_seed(seed, 41));
    const TimeSeries a = white_noise(120, rng);
    const TimeSeries b = white_noise(120, rng);
    const GrangerScreen s = granger_screen(a, b);
    positives += s.theta_causes_psi() + s.psi_causes_theta();
  }
  EXPECT_GE(positives, 12);
  EXPECT_LE(positives, 48);
}

TEST(Granger, LagSelectionPrefersTrueOrder) {
  Rng rng(7);
  const TimeSeries u = white_noise(200, rng);
  TimeSeries y(1, 200);
  for (Eigen::Index t = 3; t < 200; ++t) y(0, t) = u(0, t - 3) + 0.05 * rng.normal();
  EXPECT_EQ(select_granger_lag(u, y, 5), 3);
}

TEST(Granger, VectorCauseBlockTest) {
  Rng rng(8);
  TimeSeries u(2, 120);
  for (Eigen::Index t = 0; t < 120; ++t) u.sample(t) << rng.uniform(-1, 1), rng.uniform(-1, 1);
  TimeSeries y(1, 120);
  for (Eigen::Index t = 1; t < 120; ++t) y(0, t) = u(1, t - 1) + 0.2 * rng.normal();
  const GrangerResult r = granger_test(u, y, 2);
  EXPECT_EQ(r.df_num, 4);
  EXPECT_TRUE(r.verdict);
}

TEST(Screen, BlockModeDropsDependentComponents) {
  Rng rng(9);
  TimeSeries theta = white_noise(80, rng);
  TimeSeries psi(2, 80);
  for (Eigen::Index t = 0; t < 80; ++t) {
    psi(0, t) = rng.uniform(-1, 1);
    psi(1, t) = 2.0 * psi(0, t);
  }
  GrangerConfig cfg;
  cfg.lag = 1;
  const GrangerScreen s = granger_screen(theta, psi, cfg);
  ASSERT_EQ(s.psi_to_theta.size(), 1u);
  EXPECT_EQ(s.psi_to_theta[0].cause_components, (std::vector<Eigen::Index>{0}));
  EXPECT_EQ(s.theta_to_psi.size(), 2u);
}

TEST(Screen, RandomWalksAreDifferenced) {
  Rng rng(10);
  const TimeSeries a = random_walk(150, rng), b = random_walk(150, rng);
  const GrangerScreen s = granger_screen(a, b);
  EXPECT_GE(s.theta_prep[0].differences, 1);
  EXPECT_GE(s.psi_prep[0].differences, 1);
  EXPECT_FALSE(s.theta_prep[0].adf.empty());
}

TEST(Screen, ConstantComponentsAreSkipped) {
  const LabeledDataset d = reference_dataset(reference_example(4), kDefaultExampleSeed);
  GrangerConfig cfg;
  cfg.lag = 1;
  const GrangerScreen s = granger_screen(d.theta, d.psi, cfg);
  EXPECT_TRUE(s.theta_prep[1].constant);
  EXPECT_TRUE(s.psi_prep[1].constant);
  EXPECT_EQ(s.theta_to_psi.size(), 1u);
}

GrangerConfig example_config(const ReferenceExample& ex, int lag) {
  GrangerConfig cfg;
  cfg.lag = lag;
  cfg.mode = ex.granger_mode;
  cfg.theta_components = ex.granger_theta_components;
  cfg.psi_components = ex.granger_psi_components;
  return cfg;
}

TEST(Examples, IndependenceShowsNoCausality) {
  const ReferenceExample ex = reference_example(1);
  const LabeledDataset d = reference_dataset(ex, kDefaultExampleSeed);
  for (int lag = 0; lag <= 5; ++lag) {
    const GrangerScreen s = granger_screen(d.theta, d.psi, example_config(ex, lag));
    EXPECT_FALSE(s.theta_causes_psi()) << lag;
    EXPECT_FALSE(s.psi_causes_theta()) << lag;
    EXPECT_TRUE(granger_agrees(s, ex.scenario.relation));
  }
}

TEST(Examples, BaselineMissesCausalityAtLagOne) {
  for (int n : {2, 3}) {
    const ReferenceExample ex = reference_example(n);
    const LabeledDataset d = reference_dataset(ex, kDefaultExampleSeed);
    const GrangerScreen s = granger_screen(d.theta, d.psi, example_config(ex, 1));
    EXPECT_FALSE(s.theta_causes_psi()) << "example " << n;
    EXPECT_FALSE(granger_agrees(s, ex.scenario.relation));
  }
}

TEST(Examples, CommonCauseLooksBidirectional) {
  const ReferenceExample ex = reference_example(4);
  const LabeledDataset d = reference_dataset(ex, kDefaultExampleSeed);
  const GrangerScreen s = granger_screen(d.theta, d.psi, example_config(ex, 1));
  EXPECT_TRUE(s.theta_causes_psi());
  EXPECT_TRUE(s.psi_causes_theta());
}

TEST(Agreement, DirectionMapping) {
  GrangerScreen none;
  GrangerScreen fwd;
  fwd.theta_to_psi.push_back({});
  fwd.theta_to_psi.back().verdict = true;
  EXPECT_TRUE(granger_agrees(none, Relation::Independence));
  EXPECT_TRUE(granger_agrees(none, Relation::LatentCommonCause));
  EXPECT_FALSE(granger_agrees(none, Relation::ThetaCausesPsi));
  EXPECT_TRUE(granger_agrees(fwd, Relation::ThetaCausesPsi));
  EXPECT_TRUE(granger_agrees(fwd, Relation::ThetaPartiallyCausesPsi));
  EXPECT_FALSE(granger_agrees(fwd, Relation::PsiCausesTheta));
}

TEST(Json, ExactFitReportsNullStatistic) {
  GrangerResult r;
  r.f_statistic = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(to_json(r)["f_statistic"].is_null());
}

}  // namespace
}  // namespace becaus
