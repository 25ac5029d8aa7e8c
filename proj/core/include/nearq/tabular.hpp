#pragma once

#include <cstddef>
#include <vector>

#include "nearq/dataset.hpp"
#include "nearq/qlearn.hpp"
#include "nearq/regression.hpp"

namespace nearq::tabular {

// Small finite-horizon MDP with rational transition probabilities
// counts[t][s][a][s'] / denominator and deterministic rewards per
// (t, s, a, s'). Enumerating every branch with its integer multiplicity
// yields an offline dataset whose cell means are the exact expectations.

template <typename T>
using Table4 = std::vector<std::vector<std::vector<std::vector<T>>>>;

struct TabularMdp {
  std::size_t n_states = 3;
  std::size_t n_actions = 2;
  int horizon = 1;  // decision stages 0..horizon
  std::size_t denominator = 4;
  Table4<std::size_t> counts;  // [t][s][a][s']
  Table4<double> rewards;      // [t][s][a][s']

  void check() const;
};

TabularMdp default_tabular_mdp(int horizon = 1, std::size_t n_states = 3);

/// Dummy coding of state s: S-1 indicators, state 0 is the reference.
std::vector<double> state_features(const TabularMdp& mdp, std::size_t s);

/// Every (s0, a0, s1, a1, ...) branch, repeated by its count product.
OfflineDataset enumerate_dataset(const TabularMdp& mdp);

/// Interaction-linear with ridge 0: saturated for two actions under dummy coding.
regression::DesignSpec saturated_design();

using QTable = std::vector<std::vector<std::vector<double>>>;  // [t][s][a]

/// Exact finite-horizon backup over the tabular model.
QTable dp_backup(const TabularMdp& mdp);

/// Max |Q_fit - Q_dp| over every (stage, state, action).
double max_discrepancy(const qlearn::QStack& stack, const TabularMdp& mdp, const QTable& exact);

}  // namespace nearq::tabular
