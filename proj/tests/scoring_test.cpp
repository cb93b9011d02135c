#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dsfraud/scoring.hpp"

using namespace dsfraud;

namespace {

RuleSpec explicit_rule(std::string id, double f, double g, double u) {
  return {std::move(id), "", ExplicitMass{f, g, u}};
}

RuleSpec scored_rule(std::string id, double p, double u) { return {std::move(id), "", ScoredMass{p, u}}; }

RuleSet ds_rules(CombinationMode mode, double threshold = 0.5) {
  return RuleSet({explicit_rule("T2a", 0.6, 0.4, 0.0), explicit_rule("T2b", 0.8, 0.2, 0.0),
                  explicit_rule("T4a", 0.7, 0.2, 0.1), explicit_rule("T4b", 0.3, 0.6, 0.1),
                  explicit_rule("even_f", 0.7, 0.3, 0.0), explicit_rule("even_g", 0.3, 0.7, 0.0),
                  explicit_rule("yes", 1, 0, 0), explicit_rule("no", 0, 1, 0)},
                 DsCombiner{mode}, threshold);
}

ScoreReport report(std::string id, double bel, double pl) {
  ScoreReport r;
  r.transaction_id = std::move(id);
  r.bel_fraud = bel;
  r.pl_fraud = pl;
  r.point_estimate = bel;
  return r;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(RuleSpec, ScoreOnlyIsBayesianMass) {
  auto m = scored_rule("r", 0.75, 0.0).to_mass();
  const auto& f = Frame::binary();
  EXPECT_DOUBLE_EQ(m.mass(f.singleton(kFraud)), 0.75);
  EXPECT_DOUBLE_EQ(m.mass(f.singleton(kGenuine)), 0.25);
  EXPECT_EQ(m.mass(f.full()), 0.0);
  EXPECT_TRUE(is_bayesian(m));
}

TEST(RuleSpec, ScoreWithUncertaintyRebuildsWideSource) {
  // 0.875 * 0.8 = 0.7, 0.125 * 0.8 = 0.1.
  auto m = scored_rule("r", 0.875, 0.2).to_mass();
  const auto& f = Frame::binary();
  EXPECT_NEAR(m.mass(f.singleton(kFraud)), 0.7, 1e-15);
  EXPECT_NEAR(m.mass(f.singleton(kGenuine)), 0.1, 1e-15);
  EXPECT_NEAR(m.mass(f.full()), 0.2, 1e-15);
}

TEST(RuleSpec, CertainRule) {
  auto m = explicit_rule("r", 1, 0, 0).to_mass();
  ASSERT_EQ(m.focal_elements().size(), 1u);
  EXPECT_EQ(m.focal_elements()[0].set, Frame::binary().singleton(kFraud).mask());
}

TEST(RuleSpec, ValidationNamesRuleAndField) {
  try {
    explicit_rule("R7", 0.5, 0.6, 0.0).validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidRule);
    EXPECT_NE(std::string(e.what()).find("R7"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { scored_rule("R", 1.5, 0.0).validate(); }), ErrorCode::InvalidRule);
  EXPECT_EQ(code_of([] { scored_rule("R", 0.5, -0.1).validate(); }), ErrorCode::InvalidRule);
  EXPECT_EQ(code_of([] { explicit_rule("R", -0.1, 0.6, 0.5).validate(); }), ErrorCode::InvalidRule);
}

TEST(RuleSet, Invariants) {
  EXPECT_EQ(code_of([] { RuleSet({scored_rule("a", 0.5, 0), scored_rule("a", 0.4, 0)}, DsCombiner{}, 0.5); }),
            ErrorCode::DuplicateRule);
  EXPECT_EQ(code_of([] { RuleSet({}, DsCombiner{}, 1.5); }), ErrorCode::InvalidThreshold);
  EXPECT_EQ(code_of([] { RuleSet({}, BayesCombiner{}, 0.5); }), ErrorCode::InvalidRule);
  EXPECT_EQ(code_of([] { ds_rules(CombinationMode::Standard).rule("missing"); }), ErrorCode::UnknownRule);
}

TEST(MassesFor, OneMassPerTriggerInOrder) {
  auto rules = ds_rules(CombinationMode::Standard);
  auto masses = masses_for(rules, {"t", {"T2b", "T2a"}, ""});
  ASSERT_EQ(masses.size(), 2u);
  EXPECT_DOUBLE_EQ(masses[0].mass(Mask{1}), 0.8);
  EXPECT_DOUBLE_EQ(masses[1].mass(Mask{1}), 0.6);
}

TEST(MassesFor, ErrorPaths) {
  auto rules = ds_rules(CombinationMode::Standard);
  EXPECT_EQ(code_of([&] { masses_for(rules, {"t", {}, ""}); }), ErrorCode::NoEvidence);
  EXPECT_EQ(code_of([&] { masses_for(rules, {"t", {"nope"}, ""}); }), ErrorCode::UnknownRule);
  EXPECT_EQ(code_of([&] { masses_for(rules, {"t", {"T2a", "T2a"}, ""}); }), ErrorCode::DuplicateTrigger);
}

TEST(Score, StandardWithoutUncertainty) {
  auto r = score(ds_rules(CombinationMode::Standard), {"t", {"T2a", "T2b"}, ""});
  EXPECT_NEAR(r.point_estimate, 0.8571, 1e-4);
  EXPECT_EQ(r.bel_fraud, r.pl_fraud);
  EXPECT_NEAR(r.conflict, 0.44, 1e-15);
  EXPECT_EQ(r.n_sources, 2u);
  EXPECT_TRUE(r.flags.confirmed);
}

TEST(Score, PaperModeReducedUncertainty) {
  auto r = score(ds_rules(CombinationMode::PaperSimplified), {"t", {"T4a", "T4b"}, ""});
  EXPECT_NEAR(r.bel_fraud, 0.404, 1e-3);
  EXPECT_NEAR(r.pl_fraud, 0.769, 1e-3);
  EXPECT_EQ(r.point_estimate, r.bel_fraud);
  EXPECT_NEAR(r.conflict, 0.48, 1e-15);
  EXPECT_TRUE(r.flags.suspicious);
  EXPECT_FALSE(r.flags.confirmed);
}

TEST(Score, EvenSourcesGiveExactlyHalf) {
  auto r = score(ds_rules(CombinationMode::Standard), {"t", {"even_f", "even_g"}, ""});
  EXPECT_EQ(r.point_estimate, 0.5);
  EXPECT_FALSE(r.flags.suspicious);
  EXPECT_FALSE(r.flags.confirmed);
}

TEST(Score, SingleRuleIsItsOwnMass) {
  auto r = score(ds_rules(CombinationMode::Standard), {"t", {"T4a"}, "{\"k\":1}"});
  EXPECT_DOUBLE_EQ(r.bel_fraud, 0.7);
  EXPECT_DOUBLE_EQ(r.pl_fraud, 0.8);
  EXPECT_EQ(r.conflict, 0.0);
  EXPECT_EQ(r.payload, "{\"k\":1}");
}

TEST(Score, TotalConflictPropagates) {
  EXPECT_EQ(code_of([] { score(ds_rules(CombinationMode::Standard), {"t", {"yes", "no"}, ""}); }),
            ErrorCode::TotalConflict);
}

TEST(Score, BayesCombiner) {
  auto model = std::make_shared<BayesModel>();
  model->prior_fraud = 7.0 / 30.0;
  model->prior_genuine = 23.0 / 30.0;
  model->likelihoods["E1"] = {4.0 / 7.0, 6.0 / 23.0};
  model->likelihoods["E2"] = {1.0 / 7.0, 2.0 / 23.0};
  RuleSet rules({scored_rule("E1", 0.4, 0), scored_rule("E2", 0.33, 0), scored_rule("E3", 0.5, 0)},
                BayesCombiner{model}, 0.5);
  auto r = score(rules, {"t", {"E1", "E2"}, ""});
  EXPECT_NEAR(r.point_estimate, 115.0 / 220.0, 1e-12);
  EXPECT_EQ(r.bel_fraud, r.pl_fraud);
  EXPECT_EQ(r.conflict, 0.0);
  EXPECT_TRUE(r.flags.confirmed);
  EXPECT_EQ(code_of([&] { score(rules, {"t", {"E3"}, ""}); }), ErrorCode::UnknownEvidence);
  EXPECT_EQ(combiner_name(rules.combiner()), "bayes");
}

TEST(Classify, ThresholdExamples) {
  EXPECT_EQ(classify(0.25, 0.98, 0.5), (Flags{true, false}));
  EXPECT_EQ(classify(0.5, 0.5, 0.5), (Flags{false, false}));
  EXPECT_EQ(classify(1.0, 1.0, 0.5), (Flags{true, true}));
}

TEST(Classify, RaisingThresholdNeverSetsAFlag) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double bel = u(rng), pl = u(rng);
    if (bel > pl) std::swap(bel, pl);
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto a = classify(bel, pl, lo);
    const auto b = classify(bel, pl, hi);
    EXPECT_TRUE(a.suspicious || !b.suspicious);
    EXPECT_TRUE(a.confirmed || !b.confirmed);
    EXPECT_TRUE(a.suspicious || !a.confirmed);
  }
}

TEST(Rank, CredibilityBeatsPlausibility) {
  auto ranked = rank({report("Y", 0.40, 0.77), report("X", 0.50, 0.70)});
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].transaction_id, "X");
  EXPECT_EQ(ranked[0].rank, 1u);
  EXPECT_EQ(ranked[1].rank, 2u);
}

TEST(Rank, TiesBrokenByIdThenPlausibility) {
  auto ranked = rank({report("b", 0.3, 0.6), report("a", 0.3, 0.6), report("c", 0.3, 0.9)});
  EXPECT_EQ(ranked[0].transaction_id, "c");
  EXPECT_EQ(ranked[1].transaction_id, "a");
  EXPECT_EQ(ranked[2].transaction_id, "b");
}

TEST(Rank, EmptyInput) { EXPECT_TRUE(rank({}).empty()); }

TEST(ScoreBatch, SkipsAndFailuresDoNotAbort) {
  auto rules = ds_rules(CombinationMode::Standard);
  std::vector<Transaction> batch = {
      {"a", {"T2a", "T2b"}, ""}, {"quiet", {}, ""}, {"clash", {"yes", "no"}, ""}, {"b", {"T4a"}, ""}};
  auto result = score_batch(rules, batch);
  ASSERT_EQ(result.ranked.size(), 2u);
  EXPECT_EQ(result.ranked[0].transaction_id, "a");
  ASSERT_EQ(result.unscored.size(), 2u);
  EXPECT_EQ(result.unscored[0].transaction_id, "quiet");
  EXPECT_EQ(result.unscored[0].reason, Unscored::Reason::Skipped);
  EXPECT_EQ(result.unscored[1].transaction_id, "clash");
  EXPECT_EQ(result.unscored[1].reason, Unscored::Reason::Failed);
  EXPECT_EQ(result.unscored[1].error, "TotalConflict");
}
