#include "nearq/cancer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "nearq/text_io.hpp"

namespace nearq::envs {

std::vector<double> CancerParams::default_dose_grid() {
  std::vector<double> grid(11);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = static_cast<double>(k) / 10.0;
  return grid;
}

void CancerParams::check() const {
  if (n_decisions < 1) throw std::invalid_argument("CancerParams: n_decisions must be >= 1");
  (void)action_space();
  if (initial_tumor_lo < 0 || initial_tumor_hi < initial_tumor_lo || initial_toxicity_lo < 0 ||
      initial_toxicity_hi < initial_toxicity_lo) {
    throw std::invalid_argument("CancerParams: invalid initial-state ranges");
  }
}

CancerState initial_state(const CancerParams& params, Engine& rng) {
  CancerState s;
  s.tumor = uniform(rng, params.initial_tumor_lo, params.initial_tumor_hi);
  s.toxicity = uniform(rng, params.initial_toxicity_lo, params.initial_toxicity_hi);
  s.baseline_tumor = s.tumor;
  s.baseline_toxicity = s.toxicity;
  s.cured = s.tumor == 0.0;
  return s;
}

CancerState advance(const CancerParams& params, const CancerState& state, double dose) {
  CancerState next = state;
  if (state.tumor > 0.0) {
    const double dT = params.a1 * std::max(state.toxicity, state.baseline_toxicity) - params.b1 * (dose - params.d1);
    next.tumor = std::max(state.tumor + dT, 0.0);
  } else {
    next.tumor = 0.0;
  }
  const double dX = params.a2 * std::max(state.tumor, state.baseline_tumor) + params.b2 * (dose - params.d2);
  next.toxicity = std::max(state.toxicity + dX, 0.0);
  next.cured = next.tumor == 0.0;
  return next;
}

double hazard(const CancerParams& params, const CancerState& state) {
  return std::exp(params.hazard_intercept + params.hazard_tumor * state.tumor +
                  params.hazard_toxicity * state.toxicity);
}

double death_probability(const CancerParams& params, const CancerState& state) {
  return -std::expm1(-hazard(params, state));
}

Transition cancer_transition(const CancerParams& params, const CancerState& state, double dose, Engine& rng) {
  if (!state.alive) throw std::invalid_argument("cancer_transition: patient is dead");
  if (!params.action_space().index_of(dose)) {
    throw std::invalid_argument("cancer_transition: dose " + format_double(dose) + " is not on the dose grid");
  }
  Transition tr;
  tr.next = advance(params, state, dose);
  const double u = uniform01(rng);
  tr.died = params.mortality && u < death_probability(params, tr.next);
  tr.next.alive = !tr.died;
  return tr;
}

double cancer_reward(const CancerState& prev, const CancerState& next, bool died) {
  const double survival = died ? -60.0 : 0.0;
  const double toxicity = (next.toxicity - prev.toxicity) <= -0.5 ? 5.0 : -5.0;
  double response = -5.0;
  if (next.tumor == 0.0) {
    response = 15.0;
  } else if (next.tumor - prev.tumor <= -0.5) {
    response = 5.0;
  }
  return survival + toxicity + response;
}

std::vector<double> cancer_features(const CancerState& state) { return {state.tumor, state.toxicity}; }

StagePolicy constant_dose(std::size_t dose_index) {
  return [dose_index](int, std::span<const double>) { return dose_index; };
}

CancerCohort simulate_cancer_cohort(const CancerParams& params, const CohortPolicy& policy, std::size_t n,
                                    std::uint64_t seed, const std::string& stream_prefix) {
  params.check();
  if (n < 1) throw std::invalid_argument("simulate_cancer_cohort: n must be >= 1");
  const ActionSpace grid = params.action_space();

  CancerCohort cohort;
  auto& data = cohort.dataset;
  data.horizon = params.horizon();
  data.action_spaces.assign(static_cast<std::size_t>(params.n_decisions), grid);
  data.feature_dims.assign(static_cast<std::size_t>(params.n_decisions), 2);
  data.patients.reserve(n);
  cohort.states.reserve(n);
  cohort.doses.reserve(n);

  const std::string init_label = stream_prefix + "initial";
  const std::string survival_label = stream_prefix + "survival";
  const std::string behavior_label = stream_prefix + "behavior";

  for (std::size_t i = 0; i < n; ++i) {
    auto init_rng = make_stream(seed, init_label, i);
    auto survival_rng = make_stream(seed, survival_label, i);
    auto behavior_rng = make_stream(seed, behavior_label, i);

    PatientTrajectory traj{static_cast<std::int64_t>(i), {}};
    std::vector<CancerState> states{initial_state(params, init_rng)};
    std::vector<std::size_t> doses;

    for (int t = 0; t < params.n_decisions; ++t) {
      const CancerState& s = states.back();
      const auto features = cancer_features(s);
      std::size_t dose_index = 0;
      if (std::holds_alternative<UniformRandomPolicy>(policy)) {
        dose_index = static_cast<std::size_t>(uniform01(behavior_rng) * static_cast<double>(grid.size()));
        dose_index = std::min(dose_index, grid.size() - 1);
      } else {
        dose_index = std::get<StagePolicy>(policy)(t, features);
        if (dose_index >= grid.size()) throw std::out_of_range("policy returned an out-of-grid dose index");
      }
      const auto tr = cancer_transition(params, s, grid.value(dose_index), survival_rng);
      traj.stages.push_back(StageRecord{features, dose_index, cancer_reward(s, tr.next, tr.died)});
      doses.push_back(dose_index);
      states.push_back(tr.next);
      if (tr.died) break;
    }
    data.patients.push_back(std::move(traj));
    cohort.states.push_back(std::move(states));
    cohort.doses.push_back(std::move(doses));
  }
  return cohort;
}

void write_trajectory_csv(const CancerCohort& cohort, const CancerParams& params, std::ostream& out) {
  const auto& grid = params.dose_grid;
  out << "patient_id,stage,tumor,toxicity,dose,reward,alive\n";
  for (std::size_t i = 0; i < cohort.states.size(); ++i) {
    const auto& traj = cohort.dataset.patients[i];
    const auto& states = cohort.states[i];
    for (std::size_t t = 0; t < states.size(); ++t) {
      out << traj.id << ',' << t << ',' << format_double(states[t].tumor) << ','
          << format_double(states[t].toxicity) << ',';
      if (t < traj.stages.size()) {
        out << format_double(grid[cohort.doses[i][t]]) << ',' << format_double(traj.stages[t].reward);
      } else {
        out << ',';
      }
      out << ',' << (states[t].alive ? 1 : 0) << '\n';
    }
  }
}

}  // namespace nearq::envs
