#include "nearq/evalkit.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "nearq/itr.hpp"
#include "nearq/qlearn.hpp"
#include "nearq/text_io.hpp"

namespace nearq::evalkit {

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

std::size_t label_index(const regression::FittedQ& model, double label) {
  const auto idx = model.action_space().index_of(label);
  if (!idx) throw std::invalid_argument("blip requires a model over the actions {-1, +1}");
  return *idx;
}

}  // namespace

EvalResult summarize_cohort(const envs::CancerCohort& cohort, const envs::CancerParams& params, std::string label) {
  const auto months = static_cast<std::size_t>(params.n_decisions) + 1;
  const auto n = cohort.states.size();
  EvalResult res;
  res.label = std::move(label);
  res.n_patients = n;
  res.mean_combined.resize(months);
  res.stderr_combined.resize(months);

  std::vector<double> column(n);
  for (std::size_t month = 0; month < months; ++month) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& states = cohort.states[i];
      const auto& s = states[std::min(month, states.size() - 1)];
      column[i] = s.tumor + s.toxicity;
    }
    const auto ms = mean_se(column);
    res.mean_combined[month] = ms.mean;
    res.stderr_combined[month] = ms.se;
  }

  std::vector<double> totals(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& rec : cohort.dataset.patients[i].stages) totals[i] += rec.reward;
    if (!cohort.states[i].back().alive) ++res.n_deaths;
  }
  const auto ms = mean_se(totals);
  res.mean_cum_reward = ms.mean;
  res.stderr_cum_reward = ms.se;
  return res;
}

EvalResult evaluate_policy(const envs::CancerParams& params, const envs::StagePolicy& policy,
                           const std::string& label, std::size_t n_test, std::uint64_t seed,
                           bool shared_initial_states) {
  const std::string prefix = shared_initial_states ? "eval/" : "eval/" + label + "/";
  const auto cohort = envs::simulate_cancer_cohort(params, policy, n_test, seed, prefix);
  return summarize_cohort(cohort, params, label);
}

std::string constant_dose_label(double dose) { return "const_" + format_double(dose); }

std::vector<EvalResult> constant_dose_baselines(const envs::CancerParams& params, std::size_t n_test,
                                                std::uint64_t seed) {
  std::vector<EvalResult> out;
  for (std::size_t k = 0; k < params.dose_grid.size(); ++k) {
    out.push_back(evaluate_policy(params, envs::constant_dose(k), constant_dose_label(params.dose_grid[k]), n_test,
                                  seed, true));
  }
  return out;
}

BandCurve epsilon_band_curve(const EvalResult& optimal, std::span<const EvalResult> policies, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  BandCurve band;
  band.epsilon = epsilon;
  for (const auto& p : policies) {
    if (p.months() != optimal.months()) {
      throw std::invalid_argument("epsilon_band_curve: policy '" + p.label + "' has a different horizon");
    }
    band.overlays.push_back(p);
  }
  band.lo = optimal.mean_combined;
  band.hi.resize(optimal.months());
  for (std::size_t t = 0; t < optimal.months(); ++t) {
    band.hi[t] = optimal.mean_combined[t] + epsilon * std::abs(optimal.mean_combined[t]);
  }
  return band;
}

double estimated_blip(const regression::FittedQ& model, std::span<const double> x) {
  return model.predict(x, label_index(model, 1.0)) - model.predict(x, label_index(model, -1.0));
}

std::vector<BlipPoint> blip_surface(const regression::FittedQ& model, std::size_t grid_resolution,
                                    std::span<const double> fixed_covariates) {
  if (grid_resolution < 1) throw std::invalid_argument("blip_surface: grid_resolution must be >= 1");
  std::vector<double> x(model.feature_dim(), 0.0);
  if (x.size() < 2) throw std::invalid_argument("blip_surface: model needs at least two covariates");
  if (!fixed_covariates.empty()) {
    if (fixed_covariates.size() != x.size()) throw std::invalid_argument("blip_surface: fixed covariate size mismatch");
    std::copy(fixed_covariates.begin(), fixed_covariates.end(), x.begin());
  }
  auto coord = [&](std::size_t k) {
    return grid_resolution == 1 ? 0.0
                                : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(grid_resolution - 1);
  };
  std::vector<BlipPoint> out;
  out.reserve(grid_resolution * grid_resolution);
  for (std::size_t r = 0; r < grid_resolution; ++r) {
    for (std::size_t c = 0; c < grid_resolution; ++c) {
      x[0] = coord(r);
      x[1] = coord(c);
      out.push_back({x[0], x[1], estimated_blip(model, x)});
    }
  }
  return out;
}

BandStats band_stats(const regression::FittedQ& model, const OfflineDataset& test_set, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("band_stats: epsilon must be >= 0");
  BandStats st;
  st.epsilon = epsilon;
  std::size_t in_band = 0;
  std::size_t outside = 0;
  std::size_t outside_correct = 0;
  for (const auto& traj : test_set.patients) {
    const auto x = history_features(traj, 0);
    const auto q = model.predict_all_actions(x);
    const double chosen = model.action_space().value(qlearn::argmax_lowest(q));
    const bool wrong = chosen != envs::true_optimal_action(x);
    const bool band = std::abs(estimated_blip(model, x)) <= epsilon;
    ++st.n_test;
    st.misclassified_total += wrong ? 1 : 0;
    if (band) {
      ++in_band;
      st.misclassified_in_band += wrong ? 1 : 0;
    } else {
      ++outside;
      outside_correct += wrong ? 0 : 1;
    }
  }
  if (st.n_test) {
    st.band_fraction = static_cast<double>(in_band) / static_cast<double>(st.n_test);
    st.accuracy = 1.0 - static_cast<double>(st.misclassified_total) / static_cast<double>(st.n_test);
  }
  st.accuracy_outside_band = outside ? static_cast<double>(outside_correct) / static_cast<double>(outside) : 1.0;
  return st;
}

void write_results_csv(std::span<const EvalResult> results, std::ostream& out) {
  out << "policy_label,month,mean_combined,stderr_combined,mean_cum_reward\n";
  for (const auto& r : results) {
    for (std::size_t t = 0; t < r.months(); ++t) {
      out << r.label << ',' << t << ',' << format_double(r.mean_combined[t]) << ','
          << format_double(r.stderr_combined[t]) << ',' << format_double(r.mean_cum_reward) << '\n';
    }
  }
}

void write_band_csv(const BandCurve& band, std::ostream& out) {
  out << "month,band_lo,band_hi\n";
  for (std::size_t t = 0; t < band.lo.size(); ++t) {
    out << t << ',' << format_double(band.lo[t]) << ',' << format_double(band.hi[t]) << '\n';
  }
}

void write_blip_csv(std::span<const BlipPoint> points, std::ostream& out) {
  out << "x0,x1,blip\n";
  for (const auto& p : points) out << format_double(p.x0) << ',' << format_double(p.x1) << ',' << format_double(p.blip) << '\n';
}

void write_band_stats_csv(std::span<const BandStats> stats, std::ostream& out) {
  out << "epsilon,n_test,misclassified_total,misclassified_in_band,band_fraction,accuracy,accuracy_outside_band\n";
  for (const auto& s : stats) {
    out << format_double(s.epsilon) << ',' << s.n_test << ',' << s.misclassified_total << ','
        << s.misclassified_in_band << ',' << format_double(s.band_fraction) << ',' << format_double(s.accuracy) << ','
        << format_double(s.accuracy_outside_band) << '\n';
  }
}

}  // namespace nearq::evalkit
