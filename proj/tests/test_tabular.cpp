#include <gtest/gtest.h>

#include "nearq/qlearn.hpp"
#include "nearq/tabular.hpp"
#include "oracles.hpp"

using namespace nearq;
using namespace nearq::tabular;

TEST(Tabular, FixtureIsProperlyNormalized) {
  for (int h : {0, 1, 3}) {
    for (std::size_t s : {2u, 3u, 4u}) EXPECT_NO_THROW(default_tabular_mdp(h, s).check());
  }
  auto broken = default_tabular_mdp(1, 3);
  broken.counts[0][1][0][0] += 1;
  EXPECT_THROW(broken.check(), std::invalid_argument);
}

TEST(Tabular, EnumerationSizeAndValidity) {
  const auto mdp = default_tabular_mdp(1, 3);
  const auto ds = enumerate_dataset(mdp);
  // Each stage multiplies by K actions times the count denominator.
  EXPECT_EQ(ds.size(), 3u * 8u * 8u);
  const auto report = validate(ds);
  EXPECT_TRUE(report.empty()) << report.to_string();
  EXPECT_EQ(state_features(mdp, 0), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(state_features(mdp, 2), (std::vector<double>{0.0, 1.0}));
}

TEST(Tabular, FittedStackMatchesDynamicProgramming) {
  for (int h : {0, 1, 2}) {
    const auto mdp = default_tabular_mdp(h, 3);
    const auto stack = qlearn::backward_fit(enumerate_dataset(mdp), saturated_design());
    EXPECT_LT(max_discrepancy(stack, mdp, dp_backup(mdp)), 1e-8) << "T=" << h;
  }
}

TEST(Tabular, DiscrepancyDetectsPerturbedRewards) {
  const auto mdp = default_tabular_mdp(1, 3);
  auto ds = enumerate_dataset(mdp);
  ds.patients.front().stages.back().reward += 1.0;
  const auto stack = qlearn::backward_fit(ds, saturated_design());
  EXPECT_GT(max_discrepancy(stack, mdp, dp_backup(mdp)), 1e-3);
}
