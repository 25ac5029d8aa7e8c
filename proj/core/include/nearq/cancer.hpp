#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nearq/dataset.hpp"
#include "nearq/rng.hpp"

namespace nearq::envs {

// Monthly chemotherapy model with tumor size T and toxicity X:
//
//   dT = [a1 max(X_t, X_0) - b1 (D_t - d1)] 1(T_t > 0),  T_{t+1} = max(T_t + dT, 0)
//   dX =  a2 max(T_t, T_0) + b2 (D_t - d2),              X_{t+1} = max(X_t + dX, 0)
//
// After each month the patient dies with probability 1 - exp(-lambda),
// lambda = exp(mu0 + mu_T T_{t+1} + mu_X X_{t+1}).

struct CancerParams {
  int n_decisions = 6;  // decisions at months 0..5, states at months 0..6
  std::vector<double> dose_grid = default_dose_grid();

  double hazard_intercept = -4.0;
  double hazard_tumor = 1.0;
  double hazard_toxicity = 1.0;

  double a1 = 0.15;
  double a2 = 0.1;
  double b1 = 1.2;
  double b2 = 1.2;
  double d1 = 0.5;
  double d2 = 0.5;

  double initial_tumor_lo = 0.0;
  double initial_tumor_hi = 2.0;
  double initial_toxicity_lo = 0.0;
  double initial_toxicity_hi = 2.0;

  // Test hook: with mortality off nobody dies (draws are still consumed).
  bool mortality = true;

  static std::vector<double> default_dose_grid();

  /// Final decision stage of the offline dataset.
  int horizon() const { return n_decisions - 1; }
  ActionSpace action_space() const { return ActionSpace(dose_grid); }
  void check() const;
};

struct CancerState {
  double tumor = 0.0;
  double toxicity = 0.0;
  double baseline_tumor = 0.0;
  double baseline_toxicity = 0.0;
  bool alive = true;
  bool cured = false;

  bool operator==(const CancerState&) const = default;
};

CancerState initial_state(const CancerParams& params, Engine& rng);

/// Deterministic monthly update (no survival draw).
CancerState advance(const CancerParams& params, const CancerState& state, double dose);

double hazard(const CancerParams& params, const CancerState& state);
double death_probability(const CancerParams& params, const CancerState& state);

struct Transition {
  CancerState next;
  bool died = false;
};

/// One month: dynamics, then one survival draw from `rng` at the new state.
/// Throws std::invalid_argument if `dose` is not on the grid.
Transition cancer_transition(const CancerParams& params, const CancerState& state, double dose, Engine& rng);

double cancer_reward(const CancerState& prev, const CancerState& next, bool died);

/// Regression features of a state: (tumor, toxicity).
std::vector<double> cancer_features(const CancerState& state);

using StagePolicy = std::function<std::size_t(int stage, std::span<const double> features)>;
struct UniformRandomPolicy {};
using CohortPolicy = std::variant<UniformRandomPolicy, StagePolicy>;

StagePolicy constant_dose(std::size_t dose_index);

struct CancerCohort {
  OfflineDataset dataset;
  // states[i] holds the monthly states of patient i, ending at death or month n_decisions.
  std::vector<std::vector<CancerState>> states;
  std::vector<std::vector<std::size_t>> doses;
};

/// Simulates n patients. Streams are keyed by `stream_prefix` + {"initial",
/// "survival", "behavior"} and the patient index, so two cohorts sharing a
/// prefix and seed start from identical states and face identical survival
/// draws.
CancerCohort simulate_cancer_cohort(const CancerParams& params, const CohortPolicy& policy, std::size_t n,
                                    std::uint64_t seed, const std::string& stream_prefix = "");

/// patient_id,stage,tumor,toxicity,dose,reward,alive
void write_trajectory_csv(const CancerCohort& cohort, const CancerParams& params, std::ostream& out);

}  // namespace nearq::envs
