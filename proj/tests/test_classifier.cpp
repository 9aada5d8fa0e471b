#include "becaus/classifier.hpp"
#include "becaus/data_gen.hpp"
#include "becaus/error.hpp"
#include "becaus/examples.hpp"
#include "becaus/lti.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>

namespace becaus {
namespace {

LabeledDataset example(int n) {
  return reference_dataset(reference_example(n), kDefaultExampleSeed);
}

HankelBlocks blocks_of(const LabeledDataset& d, bool swap = false) {
  return swap ? partition(d.psi, d.theta, d.T_ini) : partition(d.theta, d.psi, d.T_ini);
}

LabeledDataset scenario_dataset(Relation rel, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 21));
  ScenarioDims dims = minimal_dims(rel);
  if (rel != Relation::LatentCommonCause && rng.canonical() < 0.5) dims.theta += 1;
  const Eigen::Index n = rng.uniform_int(1, 4);
  const LtiSystem sys =
      random_discoverable_system(layout_for(rel, n, dims), {rel}, rng.next_u64());
  return generate({rel}, sys, rng.uniform_int(50, 200), rng.next_u64());
}

TEST(Partition, ShapesFollowColumnCount) {
  const TimeSeries theta = TimeSeries::from_samples({{1}, {2}, {3}, {4}, {5}});
  const TimeSeries psi = TimeSeries::from_samples({{6}, {7}, {8}, {9}, {10}});
  const HankelBlocks b = partition(theta, psi, 1);
  EXPECT_EQ(b.columns(), 3);
  EXPECT_EQ(b.theta_past.rows(), 1);
  EXPECT_EQ(b.theta_future.rows(), 2);
  EXPECT_EQ(b.psi_past.rows(), 1);
  EXPECT_EQ(b.psi_future.rows(), 2);

  const HankelBlocks shorter = partition(theta.window(0, 4), psi.window(0, 4), 1);
  EXPECT_EQ(shorter.theta_past.cols(), 2);
  EXPECT_EQ(shorter.psi_future.rows(), 2);
  EXPECT_EQ(shorter.psi_future.cols(), 2);
}

TEST(Partition, FirstColumnIsTheInitialStretch) {
  const LabeledDataset d = example(3);
  const HankelBlocks b = blocks_of(d);
  Vector first(b.theta_past.rows() + b.theta_future.rows());
  first << b.theta_past.col(0), b.theta_future.col(0);
  EXPECT_EQ(first, d.theta.flatten(0, d.T_ini + 2));
  EXPECT_EQ(b.theta_ini, d.theta.flatten(0, d.T_ini));
  EXPECT_EQ(b.psi_ini, d.psi.flatten(0, d.T_ini));
  const Matrix h = build_hankel(d.psi, d.T_ini + 2);
  EXPECT_EQ(h.topRows(b.psi_past.rows()), b.psi_past);
  EXPECT_EQ(h.bottomRows(b.psi_future.rows()), b.psi_future);
}

TEST(Partition, ExampleTwoColumnCount) {
  const LabeledDataset d = example(2);
  ASSERT_EQ(d.T_ini, 3);
  EXPECT_EQ(blocks_of(d).columns(), 46);
}

TEST(Partition, RejectsShortOrMismatchedSeries) {
  const TimeSeries a(1, 4), b(1, 4), c(1, 5);
  EXPECT_THROW(partition(a, b, 3), LengthError);
  EXPECT_THROW(partition(a, b, 0), LengthError);
  EXPECT_THROW(partition(a, c, 1), DimensionError);
}

TEST(Tests, ExampleTwoFullCausality) {
  const HankelBlocks b = blocks_of(example(2));
  EXPECT_TRUE(test1(b));
  EXPECT_FALSE(test2(b));
  EXPECT_TRUE(test3(b));
  EXPECT_FALSE(test4(b));
}

TEST(Tests, ExampleTwoSwappedIsReverseCausality) {
  const HankelBlocks b = blocks_of(example(2), true);
  EXPECT_FALSE(test1(b));
  EXPECT_TRUE(test2(b));
  EXPECT_FALSE(test3(b));
  EXPECT_TRUE(test4(b));
}

TEST(Tests, IndependenceIsAllFalse) {
  const HankelBlocks b = blocks_of(example(1));
  EXPECT_FALSE(test1(b));
  EXPECT_FALSE(test2(b));
  EXPECT_FALSE(test3(b));
  EXPECT_FALSE(test4(b));
}

TEST(Tests, ExampleThreePartialCausality) {
  const HankelBlocks b = blocks_of(example(3));
  EXPECT_FALSE(test1(b));
  EXPECT_FALSE(test2(b));
  EXPECT_TRUE(test3(b));
  EXPECT_FALSE(test4(b));
  // Swapping roles turns it into the mirrored relation.
  EXPECT_FALSE(test3(blocks_of(example(3), true)));
  EXPECT_TRUE(test4(blocks_of(example(3), true)));
}

TEST(Tests, ExampleFourCommonCause) {
  const HankelBlocks b = blocks_of(example(4));
  EXPECT_FALSE(test1(b));
  EXPECT_FALSE(test2(b));
  EXPECT_TRUE(test3(b));
  EXPECT_TRUE(test4(b));
}

TEST(Classify, ReferenceExamples) {
  const std::map<int, Relation> expected = {{1, Relation::Independence},
                                            {2, Relation::ThetaCausesPsi},
                                            {3, Relation::ThetaPartiallyCausesPsi},
                                            {4, Relation::LatentCommonCause}};
  for (const auto& [n, rel] : expected) {
    const LabeledDataset d = example(n);
    EXPECT_EQ(classify(d.theta, d.psi, d.T_ini).relation, rel) << "example " << n;
  }
}

TEST(Classify, TableLookup) {
  EXPECT_EQ(relation_from({false, false, false, false}), Relation::Independence);
  EXPECT_EQ(relation_from({true, false, true, false}), Relation::ThetaCausesPsi);
  EXPECT_EQ(relation_from({false, true, false, true}), Relation::PsiCausesTheta);
  EXPECT_EQ(relation_from({false, false, true, false}), Relation::ThetaPartiallyCausesPsi);
  EXPECT_EQ(relation_from({false, false, false, true}), Relation::PsiPartiallyCausesTheta);
  EXPECT_EQ(relation_from({false, false, true, true}), Relation::LatentCommonCause);
  int inconclusive = 0;
  for (int bits = 0; bits < 16; ++bits) {
    const TestVerdicts v{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0};
    inconclusive += relation_from(v) == Relation::Inconclusive ? 1 : 0;
  }
  EXPECT_EQ(inconclusive, 10);
}

TEST(Classify, VerdictsMatchRankDiagnostics) {
  const LabeledDataset d = example(3);
  const BeCausOutcome o = classify(d.theta, d.psi, d.T_ini);
  EXPECT_EQ(o.tests, verdicts_from(o.ranks, d.theta.dim(), d.psi.dim()));
  const HankelBlocks b = blocks_of(d);
  EXPECT_EQ(o.tests.t1, test1(b));
  EXPECT_EQ(o.tests.t3, test3(b));
  EXPECT_LE(o.ranks.past_residual, 1e-8);
}

TEST(Classify, InconsistentInitialWindowIsDataIntegrityError) {
  HankelBlocks b = blocks_of(example(2));
  b.theta_ini(0) += 1.0;
  EXPECT_THROW(rank_diagnostics(b), DataIntegrityError);
}

TEST(Classify, OutOfTablePatternIsInconclusive) {
  // A full-state static map psi = theta: both directions are unique.
  Rng rng(3);
  TimeSeries theta(1, 40);
  for (Eigen::Index t = 0; t < 40; ++t) theta(0, t) = rng.uniform(-1, 1);
  const BeCausOutcome o = classify(theta, theta, 2);
  EXPECT_TRUE(o.tests.t1);
  EXPECT_TRUE(o.tests.t2);
  EXPECT_EQ(o.relation, Relation::Inconclusive);
}

TEST(Classify, JsonCarriesVerdictsAndRanks) {
  const LabeledDataset d = example(2);
  const nlohmann::json j = to_json(classify(d.theta, d.psi, d.T_ini));
  EXPECT_EQ(j["relation"], "R2");
  EXPECT_EQ(j["t1"], true);
  EXPECT_EQ(j["t2"], false);
  EXPECT_EQ(j["T"], 50);
  EXPECT_EQ(j["T_ini"], 3);
  EXPECT_TRUE(j["ranks"].contains("past"));
  EXPECT_DOUBLE_EQ(j["tolerances"]["rank_rtol"].get<double>(), 1e-9);
}

TEST(Properties, SwapSymmetry) {
  for (Relation rel : kAllRelations) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const LabeledDataset d = scenario_dataset(rel, seed);
      const BeCausOutcome fwd = classify(d.theta, d.psi, d.T_ini);
      const BeCausOutcome rev = classify(d.psi, d.theta, d.T_ini);
      EXPECT_EQ(rev.relation, swapped(fwd.relation));
      EXPECT_EQ(fwd.tests.t1, rev.tests.t2);
      EXPECT_EQ(fwd.tests.t3, rev.tests.t4);
    }
  }
}

TEST(Properties, ScaleInvariance) {
  Rng rng(8);
  for (Relation rel : kAllRelations) {
    const LabeledDataset d = scenario_dataset(rel, 5);
    const Relation base = classify(d.theta, d.psi, d.T_ini).relation;
    ASSERT_EQ(base, rel);
    for (int i = 0; i < 5; ++i) {
      const double c = std::pow(10.0, rng.uniform(-3, 3));
      const TimeSeries theta(c * d.theta.values());
      const TimeSeries psi(c * d.psi.values());
      EXPECT_EQ(classify(theta, psi, d.T_ini).relation, base) << c;
    }
  }
}

TEST(Properties, GroundTruthOnDiscoverableSystems) {
  for (Relation rel : kAllRelations) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      const LabeledDataset d = scenario_dataset(rel, 1000 + seed);
      ASSERT_TRUE(check_identifiable(d).identifiable);
      EXPECT_EQ(classify(d.theta, d.psi, d.T_ini).relation, rel)
          << relation_label(rel) << " seed " << seed;
    }
  }
}

TEST(Properties, InflatedInitialWindowKeepsVerdict) {
  for (Relation rel : kAllRelations) {
    const LabeledDataset d = scenario_dataset(rel, 77);
    for (Eigen::Index extra = 1; extra <= 3; ++extra) {
      EXPECT_EQ(classify(d.theta, d.psi, d.T_ini + extra).relation, rel);
    }
  }
}

TEST(Properties, IndependenceNeverLooksCausal) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LabeledDataset d = scenario_dataset(Relation::Independence, seed);
    EXPECT_EQ(classify(d.theta, d.psi, d.T_ini).relation, Relation::Independence);
    GenerateOptions streams;
    streams.independence_mode = IndependenceMode::IndependentStreams;
    streams.theta_dim = d.theta.dim();
    const LabeledDataset s =
        generate({Relation::Independence}, std::nullopt, d.T, seed, streams);
    EXPECT_EQ(classify(s.theta, s.psi, s.T_ini).relation, Relation::Independence);
  }
}

TEST(Oracle, RankCharacterizationsMatchSampling) {
  int counts[4] = {0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const testing::SmallInstance inst = testing::small_instance(seed);
    ASSERT_LE(inst.blocks.columns(), 12);
    Rng rng(seed);
    const testing::SamplingVerdicts oracle = testing::sampling_oracle(inst.blocks, rng);
    const TestVerdicts v{test1(inst.blocks), test2(inst.blocks), test3(inst.blocks),
                         test4(inst.blocks)};
    EXPECT_EQ(v, oracle.verdicts) << "seed " << seed << " (" << inst.origin << ")";
    counts[0] += v.t1;
    counts[1] += v.t2;
    counts[2] += v.t3;
    counts[3] += v.t4;
    for (const auto* certs : {&oracle.certificates_t3, &oracle.certificates_t4}) {
      for (const testing::FeasibilityCheck& c : *certs) {
        EXPECT_GT(c.certificate_rhs, 1e-6);
        EXPECT_LT(c.certificate_lhs, 1e-8);
      }
    }
    EXPECT_EQ(oracle.verdicts.t3, !oracle.certificates_t3.empty());
    EXPECT_EQ(oracle.verdicts.t4, !oracle.certificates_t4.empty());
  }
  for (int c : counts) {
    EXPECT_GT(c, 5);
    EXPECT_LT(c, 115);
  }
}

}  // namespace
}  // namespace becaus
