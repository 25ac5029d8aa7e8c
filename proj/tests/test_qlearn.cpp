#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "nearq/itr.hpp"
#include "nearq/qlearn.hpp"
#include "nearq/tabular.hpp"
#include "oracles.hpp"

using namespace nearq;
using namespace nearq::qlearn;
using regression::FittedQ;

namespace {

// Q(x, a) = b0 + b1 x + bA a + bAX a x over labels {0, 1}.
FittedQ linear_1d(double b0, double b1, double ba, double bax) {
  Eigen::VectorXd beta(4);
  beta << b0, b1, ba, bax;
  return FittedQ(ActionSpace::integer_codes(2), 1, 0.0, FittedQ::LinearParams{beta});
}

OfflineDataset two_stage_1d(std::vector<std::vector<StageRecord>> patients) {
  OfflineDataset ds;
  ds.horizon = 1;
  ds.action_spaces.assign(2, ActionSpace::integer_codes(2));
  ds.feature_dims.assign(2, 1);
  std::int64_t id = 0;
  for (auto& stages : patients) ds.patients.push_back(PatientTrajectory{id++, std::move(stages)});
  return ds;
}

}  // namespace

TEST(Argmax, LowestIndexWinsTies) {
  const std::vector<double> a{0.1, 0.9};
  const std::vector<double> b{0.5, 0.5};
  const std::vector<double> c{-3.0, 2.0, 2.0, 1.0};
  EXPECT_EQ(argmax_lowest(a), 1u);
  EXPECT_EQ(argmax_lowest(b), 0u);
  EXPECT_EQ(argmax_lowest(c), 1u);
  EXPECT_EQ(max_value(c), 2.0);
}

TEST(FinalStage, SingleStageEqualsDirectFit) {
  const auto ds = fixtures::random_dataset(2, {40, 0, 2, 3, 0.0, false});
  const auto spec = regression::DesignSpec::interaction_linear();
  const auto rows = collect_stage(ds, 0);
  const auto direct = regression::fit(spec, rows.features, rows.actions, rows.rewards, ds.actions(0));
  EXPECT_TRUE(fit_final_stage(ds, spec) == direct);
  const auto stack = backward_fit(ds, spec);
  ASSERT_EQ(stack.models().size(), 1u);
  EXPECT_TRUE(stack.model(0) == direct);
}

TEST(FinalStage, SaturatedTabularFitEqualsCellMeans) {
  // Two states (dummy 0/1) and two actions with repeated observations.
  OfflineDataset ds;
  ds.horizon = 0;
  ds.action_spaces = {ActionSpace::integer_codes(2)};
  ds.feature_dims = {1};
  const std::vector<std::tuple<double, std::size_t, double>> rows{
      {0, 0, 1.0}, {0, 0, 3.0}, {0, 1, -2.0}, {0, 1, 4.0}, {0, 1, 7.0},
      {1, 0, 10.0}, {1, 1, 0.5}, {1, 1, 1.5}, {1, 0, 12.0}, {1, 0, 14.0}};
  std::int64_t id = 0;
  for (const auto& [s, a, y] : rows) ds.patients.push_back({id++, {StageRecord{{s}, a, y}}});
  const auto q = fit_final_stage(ds, tabular::saturated_design());
  const std::vector<double> s0{0.0};
  const std::vector<double> s1{1.0};
  EXPECT_NEAR(q.predict(s0, 0), 2.0, 1e-12);
  EXPECT_NEAR(q.predict(s0, 1), 3.0, 1e-12);
  EXPECT_NEAR(q.predict(s1, 0), 12.0, 1e-12);
  EXPECT_NEAR(q.predict(s1, 1), 1.0, 1e-12);
}

TEST(FinalStage, NobodyReachesFinalStage) {
  auto ds = two_stage_1d({{StageRecord{{0.1}, 0, 1.0}}, {StageRecord{{0.2}, 1, 2.0}}});
  try {
    (void)fit_final_stage(ds, regression::DesignSpec::interaction_linear(1.0));
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("empty final stage"), std::string::npos);
  }
}

TEST(PseudoOutcome, RewardPlusBestNextValue) {
  // Next model at x = 0: [2, -1].
  const auto next = linear_1d(2.0, 0.0, -3.0, 0.0);
  auto ds = two_stage_1d({{StageRecord{{0.4}, 0, 1.0}, StageRecord{{0.0}, 1, 0.0}},
                          {StageRecord{{0.3}, 1, -60.0}}});
  const auto po = pseudo_outcome_vector(ds, 0, next);
  ASSERT_EQ(po.columns(), 1u);
  EXPECT_TRUE(po.present[0]);
  EXPECT_DOUBLE_EQ(po.values(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(po.values(1, 0), -60.0);
  EXPECT_THROW(pseudo_outcome_vector(ds, 1, next), std::invalid_argument);
}

TEST(PseudoOutcome, ZeroNextModelGivesObservedReward) {
  const auto ds = fixtures::random_dataset(5, {30, 1, 1, 2, 0.2, true});
  const auto po = pseudo_outcome_vector(ds, 0, linear_1d(0, 0, 0, 0));
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(po.values(static_cast<Eigen::Index>(i), 0), ds.patients[i].stages[0].reward);
}

TEST(PseudoOutcome, PatientsDeadBeforeStageAreAbsent) {
  const auto ds = fixtures::random_dataset(9, {50, 2, 1, 2, 0.4, true});
  const auto stack = backward_fit(ds, regression::DesignSpec::interaction_linear());
  const auto po = pseudo_outcome_vector(ds, 1, stack.model(2));
  std::size_t present = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(po.present[i], ds.patients[i].has_stage(1));
    if (!po.present[i]) { EXPECT_TRUE(std::isnan(po.values(static_cast<Eigen::Index>(i), 0))); }
    present += po.present[i];
  }
  EXPECT_EQ(po.column_targets(0).size(), present);
}

TEST(BackwardFit, MatchesBruteForceDpOnTabularModels) {
  for (int horizon : {0, 1, 2}) {
    for (std::size_t states : {2u, 3u, 4u}) {
      const auto mdp = tabular::default_tabular_mdp(horizon, states);
      const auto stack = backward_fit(tabular::enumerate_dataset(mdp), tabular::saturated_design());
      for (int t = 0; t <= horizon; ++t) {
        for (std::size_t s = 0; s < states; ++s) {
          const auto x = tabular::state_features(mdp, s);
          for (std::size_t a = 0; a < 2; ++a) {
            EXPECT_NEAR(stack.model(t).predict(x, a), oracle::brute_force_q(mdp, t, s, a), 1e-8)
                << "T=" << horizon << " S=" << states << " t=" << t << " s=" << s << " a=" << a;
          }
        }
      }
    }
  }
}

TEST(BackwardFit, DpBackupAgreesWithBruteForce) {
  const auto mdp = tabular::default_tabular_mdp(2, 3);
  const auto q = tabular::dp_backup(mdp);
  for (int t = 0; t <= 2; ++t)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(q[static_cast<std::size_t>(t)][s][a], oracle::brute_force_q(mdp, t, s, a), 1e-12);
}

TEST(BackwardFit, ZeroFinalRewardsReduceToStageZeroFit) {
  auto ds = fixtures::random_dataset(12, {60, 1, 2, 2, 0.0, false});
  for (auto& p : ds.patients) p.stages[1].reward = 0.0;
  const auto spec = regression::DesignSpec::interaction_linear();
  const auto stack = backward_fit(ds, spec);
  const auto zero = stack.model(1);
  EXPECT_LT(zero.coefficients().cwiseAbs().maxCoeff(), 1e-12);

  const auto rows = collect_stage(ds, 0);
  std::vector<double> targets;
  for (std::size_t r = 0; r < rows.patients.size(); ++r) {
    const auto h1 = history_features(ds.patients[rows.patients[r]], 1);
    targets.push_back(rows.rewards[r] + max_value(zero.predict_all_actions(h1)));
  }
  const auto manual = regression::fit(spec, rows.features, rows.actions, targets, ds.actions(0));
  EXPECT_TRUE(stack.model(0) == manual);
}

TEST(BackwardFit, ProvenanceNeverLooksBackward) {
  const auto stack = backward_fit(fixtures::random_dataset(1, {80, 3, 2, 3, 0.1, false}),
                                  regression::DesignSpec::interaction_linear());
  ASSERT_EQ(stack.provenance().size(), 4u);
  for (const auto& p : stack.provenance()) {
    if (p.stage == stack.horizon()) {
      EXPECT_FALSE(p.targets_from.has_value());
    } else {
      ASSERT_TRUE(p.targets_from.has_value());
      EXPECT_EQ(*p.targets_from, p.stage + 1);
    }
  }
}

TEST(BackwardFit, FitErrorsCarryTheStage) {
  auto ds = two_stage_1d({{StageRecord{{0.1}, 0, 1.0}, StageRecord{{0.5}, 1, 1.0}},
                          {StageRecord{{0.2}, 1, 2.0}, StageRecord{{0.7}, 0, 3.0}},
                          {StageRecord{{0.9}, 1, 2.0}, StageRecord{{0.3}, 0, 0.0}},
                          {StageRecord{{0.4}, 0, 2.0}, StageRecord{{0.6}, 1, 1.0}}});
  // Stage 1 has four rows for four coefficients but collinear inputs.
  for (auto& p : ds.patients) p.stages[1].covariates[0] = 0.5;
  try {
    (void)backward_fit(ds, regression::DesignSpec::interaction_linear());
    FAIL();
  } catch (const FitError& e) {
    EXPECT_EQ(e.stage(), 1);
    EXPECT_FALSE(e.column().has_value());
  }
}

TEST(Greedy, InvariantUnderConstantShift) {
  const auto ds = fixtures::random_dataset(4, {20, 0, 1, 2, 0.0, true});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double b0 = u(rng), b1 = u(rng), ba = u(rng), bax = u(rng), shift = 10.0 * u(rng);
    const QStack a(0, {linear_1d(b0, b1, ba, bax)}, {Provenance{0, std::nullopt}});
    const QStack b(0, {linear_1d(b0 + shift, b1, ba, bax)}, {Provenance{0, std::nullopt}});
    const std::vector<double> x{u(rng)};
    EXPECT_EQ(greedy_action(a, 0, x), greedy_action(b, 0, x));
  }
}

TEST(Greedy, ItrModelTreatsPositiveBlipRegion) {
  // X0 + X1 = 0.8, true blip 1.6.
  std::vector<double> x(10, 0.0);
  x[0] = 0.5;
  x[1] = 0.3;
  int plus = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto stack = backward_fit(envs::simulate_itr({1000, seed, 1.0}), regression::DesignSpec::interaction_linear());
    plus += GreedyPolicy(stack).decide(0, x) == 1;
  }
  EXPECT_EQ(plus, 50);
}

TEST(QStack, SaveLoadRoundTrip) {
  const auto stack = backward_fit(fixtures::random_dataset(6, {60, 2, 2, 3, 0.1, false}),
                                  regression::DesignSpec::per_action_kernel());
  std::stringstream blob;
  stack.save(blob);
  const auto back = QStack::load(blob);
  ASSERT_EQ(back.horizon(), 2);
  for (int t = 0; t <= 2; ++t) EXPECT_TRUE(back.model(t) == stack.model(t));
  EXPECT_EQ(back.provenance()[0].targets_from, 1);
}
