#include "nearq/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nearq::tabular {

void TabularMdp::check() const {
  if (n_states < 2 || n_actions < 1 || horizon < 0 || denominator < 1) {
    throw std::invalid_argument("TabularMdp: invalid sizes");
  }
  const auto stages = static_cast<std::size_t>(horizon) + 1;
  if (counts.size() != stages || rewards.size() != stages) throw std::invalid_argument("TabularMdp: stage tables");
  for (std::size_t t = 0; t < stages; ++t) {
    for (std::size_t s = 0; s < n_states; ++s) {
      for (std::size_t a = 0; a < n_actions; ++a) {
        const auto& c = counts.at(t).at(s).at(a);
        std::size_t total = 0;
        for (auto x : c) total += x;
        if (c.size() != n_states || total != denominator) {
          throw std::invalid_argument("TabularMdp: transition counts must sum to the denominator");
        }
      }
    }
  }
}

TabularMdp default_tabular_mdp(int horizon, std::size_t n_states) {
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = 2;
  mdp.horizon = horizon;
  mdp.denominator = 4;
  const auto stages = static_cast<std::size_t>(horizon) + 1;
  mdp.counts.assign(stages, std::vector(n_states, std::vector(2, std::vector<std::size_t>(n_states, 0))));
  mdp.rewards.assign(stages, std::vector(n_states, std::vector(2, std::vector<double>(n_states, 0.0))));
  for (std::size_t t = 0; t < stages; ++t) {
    for (std::size_t s = 0; s < n_states; ++s) {
      for (std::size_t a = 0; a < 2; ++a) {
        // Mass 2/4 on one successor and 1/4 on the next two, rotating so every
        // state stays reachable at every stage.
        const std::size_t base = (s + 2 * a + t) % n_states;
        mdp.counts[t][s][a][base] += 2;
        mdp.counts[t][s][a][(base + 1) % n_states] += 1;
        mdp.counts[t][s][a][(base + 2) % n_states] += 1;
        for (std::size_t s2 = 0; s2 < n_states; ++s2) {
          const auto k = static_cast<double>((7 * (t + 1) + 3 * s + 5 * a + 11 * s2) % 13);
          mdp.rewards[t][s][a][s2] = k - 6.0 + 0.25 * static_cast<double>(a) - 0.125 * static_cast<double>(s);
        }
      }
    }
  }
  mdp.check();
  return mdp;
}

std::vector<double> state_features(const TabularMdp& mdp, std::size_t s) {
  std::vector<double> x(mdp.n_states - 1, 0.0);
  if (s > 0) x[s - 1] = 1.0;
  return x;
}

namespace {

void expand(const TabularMdp& mdp, int t, std::size_t s, std::vector<StageRecord>& prefix,
            std::vector<PatientTrajectory>& out) {
  const auto st = static_cast<std::size_t>(t);
  for (std::size_t a = 0; a < mdp.n_actions; ++a) {
    for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
      for (std::size_t copy = 0; copy < mdp.counts[st][s][a][s2]; ++copy) {
        prefix.push_back(StageRecord{state_features(mdp, s), a, mdp.rewards[st][s][a][s2]});
        if (t == mdp.horizon) {
          out.push_back(PatientTrajectory{static_cast<std::int64_t>(out.size()), prefix});
        } else {
          expand(mdp, t + 1, s2, prefix, out);
        }
        prefix.pop_back();
      }
    }
  }
}

}  // namespace

OfflineDataset enumerate_dataset(const TabularMdp& mdp) {
  mdp.check();
  OfflineDataset data;
  data.horizon = mdp.horizon;
  data.fixed_horizon = true;
  const auto stages = static_cast<std::size_t>(mdp.horizon) + 1;
  data.action_spaces.assign(stages, ActionSpace::integer_codes(mdp.n_actions));
  data.feature_dims.assign(stages, mdp.n_states - 1);
  std::vector<StageRecord> prefix;
  for (std::size_t s0 = 0; s0 < mdp.n_states; ++s0) expand(mdp, 0, s0, prefix, data.patients);
  return data;
}

regression::DesignSpec saturated_design() { return regression::DesignSpec::interaction_linear(0.0); }

QTable dp_backup(const TabularMdp& mdp) {
  mdp.check();
  const auto stages = static_cast<std::size_t>(mdp.horizon) + 1;
  QTable q(stages, std::vector(mdp.n_states, std::vector<double>(mdp.n_actions, 0.0)));
  const auto denom = static_cast<double>(mdp.denominator);
  for (std::size_t rt = 0; rt < stages; ++rt) {
    const std::size_t t = stages - 1 - rt;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        double value = 0.0;
        for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
          double future = 0.0;
          if (t + 1 < stages) future = *std::max_element(q[t + 1][s2].begin(), q[t + 1][s2].end());
          value += static_cast<double>(mdp.counts[t][s][a][s2]) / denom * (mdp.rewards[t][s][a][s2] + future);
        }
        q[t][s][a] = value;
      }
    }
  }
  return q;
}

double max_discrepancy(const qlearn::QStack& stack, const TabularMdp& mdp, const QTable& exact) {
  double worst = 0.0;
  for (int t = 0; t <= mdp.horizon; ++t) {
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const auto x = state_features(mdp, s);
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        const double diff = std::abs(stack.model(t).predict(x, a) - exact[static_cast<std::size_t>(t)][s][a]);
        worst = std::max(worst, std::isnan(diff) ? INFINITY : diff);
      }
    }
  }
  return worst;
}

}  // namespace nearq::tabular
