#include "becaus/data_gen.hpp"
#include "becaus/error.hpp"
#include "becaus/examples.hpp"
#include "becaus/lti.hpp"
#include "becaus/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace becaus {
namespace {

SystemStructure layout(Relation rel, Eigen::Index n) {
  return layout_for(rel, n, minimal_dims(rel));
}

TEST(Generate, IndependentStreamsFollowRequestedRanges) {
  const ReferenceExample ex = reference_example(1);
  const LabeledDataset d = reference_dataset(ex, 4);
  ASSERT_FALSE(d.sys.has_value());
  EXPECT_EQ(d.truth.relation, Relation::Independence);
  EXPECT_LE(d.theta.values().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LE(d.psi.values().cwiseAbs().maxCoeff(), 10.0);
  EXPECT_GT(d.psi.values().cwiseAbs().maxCoeff(), 1.0);
}

TEST(Generate, StructureOneStreamsAreIndependentOfEachOther) {
  const LtiSystem sys = random_discoverable_system(layout(Relation::Independence, 2),
                                                   {Relation::Independence}, 1);
  GenerateOptions a;
  GenerateOptions b;
  b.distributions.psi = {-10.0, 10.0};
  b.distributions.latent = {0.0, 5.0};
  const LabeledDataset da = generate({Relation::Independence}, sys, 80, 3, a);
  const LabeledDataset db = generate({Relation::Independence}, sys, 80, 3, b);
  EXPECT_EQ(da.theta, db.theta);
  EXPECT_NE(da.psi, db.psi);
  ASSERT_TRUE(da.latent.has_value());

  // Both Structure I modes emit two independent i.i.d. streams.
  GenerateOptions streams;
  streams.independence_mode = IndependenceMode::IndependentStreams;
  const LabeledDataset ds = generate({Relation::Independence}, std::nullopt, 80, 3, streams);
  EXPECT_EQ(ds.theta, da.theta);
}

TEST(Generate, ExampleTwoAssignsInputToTheta) {
  const ReferenceExample ex = reference_example(2);
  const LabeledDataset d = reference_dataset(ex, kDefaultExampleSeed);
  EXPECT_GE(d.theta.values().minCoeff(), 0.0);
  EXPECT_LE(d.theta.values().maxCoeff(), 1.0);
  EXPECT_EQ(simulate(*ex.sys, d.theta, d.x0, d.T).y, d.psi);
  EXPECT_TRUE(check_identifiable(d).identifiable);
}

TEST(Generate, ExampleFourCollectsOnlyFirstComponentsAsSignals) {
  const LabeledDataset d = reference_dataset(reference_example(4), kDefaultExampleSeed);
  EXPECT_EQ(d.truth.relation, Relation::LatentCommonCause);
  ASSERT_EQ(d.theta.dim(), 2);
  ASSERT_EQ(d.psi.dim(), 2);
  // The second component of each block is identically zero.
  EXPECT_TRUE(d.theta.values().row(1).isZero());
  EXPECT_TRUE(d.psi.values().row(1).isZero());
  EXPECT_FALSE(d.theta.values().row(0).isZero());
  ASSERT_TRUE(d.latent.has_value());
  EXPECT_GE(d.latent->values().minCoeff(), 0.0);
}

TEST(Generate, RoleAssignmentIsPureRelabeling) {
  for (Relation rel : kAllRelations) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const LtiSystem sys = random_discoverable_system(layout(rel, 1 + seed % 3), {rel}, seed);
      const LabeledDataset d = generate({rel}, sys, 60, seed + 100);
      const Simulation sim = simulate(sys, system_inputs(d), d.x0, d.T);
      EXPECT_EQ(sim.y, system_outputs(d)) << relation_label(rel) << " seed " << seed;
      const bool latent_expected = has_latent(rel) || rel == Relation::Independence;
      EXPECT_EQ(d.latent.has_value(), latent_expected);
    }
  }
}

TEST(Generate, DefaultInitialWindowIsLagPlusOne) {
  const ReferenceExample ex = reference_example(2);
  const LabeledDataset d = generate(ex.scenario, ex.sys, 50, 1);
  EXPECT_EQ(d.T_ini, compute_lag(*ex.sys) + 1);
  GenerateOptions opts;
  opts.T_ini = 6;
  EXPECT_EQ(generate(ex.scenario, ex.sys, 50, 1, opts).T_ini, 6);
}

TEST(Generate, ShortHorizonIsRejected) {
  const ReferenceExample ex = reference_example(2);
  EXPECT_THROW(generate(ex.scenario, ex.sys, 4, 1), LengthError);
}

TEST(Generate, SystemRequiredOutsideIndependentStreams) {
  EXPECT_THROW(generate({Relation::ThetaCausesPsi}, std::nullopt, 50, 1), InputError);
}

TEST(Identifiability, ZeroInputFailsAndGeneratorGivesUp) {
  const ReferenceExample ex = reference_example(2);
  GenerateOptions opts;
  opts.distributions.theta = {0.0, 0.0};
  EXPECT_THROW(generate(ex.scenario, ex.sys, 50, 1, opts), IdentifiabilityError);

  LabeledDataset d = reference_dataset(ex, 1);
  d.theta.values().setZero();
  d.psi = simulate(*ex.sys, d.theta, d.x0, d.T).y;
  EXPECT_FALSE(check_identifiable(d).identifiable);
}

TEST(Identifiability, ExampleTwoRankReport) {
  const LabeledDataset d = reference_dataset(reference_example(2), kDefaultExampleSeed);
  const IdentifiabilityReport r = check_identifiable(d);
  EXPECT_TRUE(r.identifiable);
  EXPECT_EQ(r.depth, d.T_ini + 2);
  EXPECT_EQ(r.expected, 1 * (d.T_ini + 2) + 2);
  EXPECT_EQ(r.rank, r.expected);
}

TEST(Identifiability, OmittingLatentFromStackBreaksFormula) {
  const ReferenceExample ex = reference_example(3);
  const LabeledDataset d = reference_dataset(ex, kDefaultExampleSeed);
  ASSERT_TRUE(check_identifiable(d).identifiable);
  const TimeSeries observed = TimeSeries::stack({&d.theta, &d.psi});
  const IdentifiabilityReport wrong = hankel_rank_condition(
      observed, ex.sys->input_dim(), ex.sys->order(), d.T_ini + 2);
  EXPECT_FALSE(wrong.identifiable);
  EXPECT_LT(wrong.rank, wrong.expected);
}

TEST(Identifiability, HoldsForNearlyAllSeeds) {
  for (Relation rel : kAllRelations) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const LtiSystem sys = random_discoverable_system(layout(rel, 1 + seed % 4), {rel}, seed);
      GenerateOptions opts;
      opts.max_attempts = 1;
      try {
        const LabeledDataset d = generate({rel}, sys, 50 + seed, derive_seed(seed, 3), opts);
        ok += check_identifiable(d).identifiable ? 1 : 0;
      } catch (const IdentifiabilityError&) {
      }
    }
    EXPECT_GE(ok, 99) << relation_label(rel);
  }
}

TEST(Identifiability, RetryMovesToDerivedSeed) {
  const ReferenceExample ex = reference_example(2);
  const LabeledDataset d = generate(ex.scenario, ex.sys, 50, 12);
  EXPECT_EQ(d.requested_seed, 12u);
  EXPECT_EQ(d.seed, 12u);
}

TEST(Csv, RoundTripIsExact) {
  const LabeledDataset d = reference_dataset(reference_example(3), 5);
  const std::string text = dataset_csv(d);
  std::istringstream is(text);
  const ObservedData back = read_dataset_csv(is, d.theta.dim(), d.psi.dim());
  EXPECT_EQ(back.theta, d.theta);
  EXPECT_EQ(back.psi, d.psi);
  EXPECT_EQ(text.substr(0, text.find('\n')), "theta_0,psi_0,psi_1");
  EXPECT_EQ(dataset_csv(reference_dataset(reference_example(3), 5)), text);
}

TEST(Csv, MalformedRowNamesLocation) {
  std::istringstream is("theta_0,psi_0\n1,2\n3,oops\n5,6\n");
  try {
    read_dataset_csv(is, 1, 1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 2u);
    EXPECT_NE(std::string(e.what()).find("row"), std::string::npos);
  }
}

TEST(Csv, ShortRowIsParseError) {
  std::istringstream is("theta_0,psi_0\n1,2\n3\n");
  EXPECT_THROW(read_dataset_csv(is, 1, 1), ParseError);
}

TEST(Csv, DeclaredDimensionsMustMatchColumns) {
  std::istringstream is("theta_0,psi_0\n1,2\n");
  EXPECT_THROW(read_dataset_csv(is, 2, 1), DimensionError);
}

TEST(Csv, ExportWritesSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "becaus_data_gen_test";
  std::filesystem::create_directories(dir);
  const LabeledDataset d = reference_dataset(reference_example(2), 7);
  const std::string stem = (dir / "ex2").string();
  export_dataset(d, stem);
  std::ifstream js(stem + ".json");
  const nlohmann::json j = nlohmann::json::parse(js);
  EXPECT_EQ(j["truth"], "R2");
  EXPECT_EQ(j["T"], 50);
  EXPECT_EQ(j["T_ini"], d.T_ini);
  EXPECT_EQ(j["seed"], 7);
  const LtiSystem sys = parse_system(j["system"].get<std::string>());
  EXPECT_EQ(sys.A, d.sys->A);
  const ObservedData back = read_dataset_csv_file(stem + ".csv", 1, 1);
  EXPECT_EQ(back.psi, d.psi);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace becaus
