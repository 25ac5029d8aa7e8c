#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nearq/cancer.hpp"
#include "nearq/dataset.hpp"
#include "nearq/regression.hpp"

namespace nearq::evalkit {

/// Rollout summary of one policy on a simulated test cohort.
struct EvalResult {
  std::string label;
  // Per month 0..n_decisions: mean over all patients of tumor + toxicity.
  // Dead patients keep contributing their state at death.
  std::vector<double> mean_combined;
  std::vector<double> stderr_combined;
  double mean_cum_reward = 0.0;
  double stderr_cum_reward = 0.0;  // from per-patient totals
  std::size_t n_patients = 0;
  std::size_t n_deaths = 0;

  std::size_t months() const { return mean_combined.size(); }
};

EvalResult summarize_cohort(const envs::CancerCohort& cohort, const envs::CancerParams& params,
                            std::string label);

/// Simulates `n_test` patients under `policy`. With shared initial states,
/// every policy evaluated with the same seed starts from the same initial
/// draws and faces the same survival draws; otherwise the streams are
/// keyed by the label as well.
EvalResult evaluate_policy(const envs::CancerParams& params, const envs::StagePolicy& policy,
                           const std::string& label, std::size_t n_test, std::uint64_t seed,
                           bool shared_initial_states = true);

std::string constant_dose_label(double dose);

/// One result per grid dose, including dose 0.0, all on shared initial states.
std::vector<EvalResult> constant_dose_baselines(const envs::CancerParams& params, std::size_t n_test,
                                                std::uint64_t seed);

/// Relative tolerance band [opt, opt + eps |opt|] per month plus the curves
/// of the near-equivalent policies to overlay.
struct BandCurve {
  double epsilon = 0.0;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<EvalResult> overlays;
};

BandCurve epsilon_band_curve(const EvalResult& optimal, std::span<const EvalResult> policies, double epsilon);

struct BlipPoint {
  double x0 = 0.0;
  double x1 = 0.0;
  double blip = 0.0;
};

/// Estimated blip Q(x, +1) - Q(x, -1) on an evenly spaced r x r grid over
/// [-1, 1]^2 in (X0, X1), with the other covariates held at `fixed`
/// (zeros when empty).
std::vector<BlipPoint> blip_surface(const regression::FittedQ& model, std::size_t grid_resolution,
                                    std::span<const double> fixed_covariates = {});

double estimated_blip(const regression::FittedQ& model, std::span<const double> x);

struct BandStats {
  double epsilon = 0.0;
  std::size_t n_test = 0;
  std::size_t misclassified_total = 0;
  std::size_t misclassified_in_band = 0;
  double band_fraction = 0.0;  // share of test points with |blip| <= eps
  double accuracy = 0.0;
  double accuracy_outside_band = 1.0;
};

/// Misclassification against sign(X0 + X1) and its concentration inside the
/// absolute blip band.
BandStats band_stats(const regression::FittedQ& model, const OfflineDataset& test_set, double epsilon);

void write_results_csv(std::span<const EvalResult> results, std::ostream& out);
void write_band_csv(const BandCurve& band, std::ostream& out);
void write_blip_csv(std::span<const BlipPoint> points, std::ostream& out);
void write_band_stats_csv(std::span<const BandStats> stats, std::ostream& out);

}  // namespace nearq::evalkit
