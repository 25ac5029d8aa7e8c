#include "nearq/itr.hpp"

#include <random>
#include <stdexcept>

#include "nearq/rng.hpp"

namespace nearq::envs {

void ItrConfig::check() const {
  if (n_patients < 1) throw std::invalid_argument("ItrConfig: n_patients must be >= 1");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("ItrConfig: noise_sd must be >= 0");
}

ActionSpace itr_action_space() { return ActionSpace({-1.0, 1.0}); }

double itr_mean_outcome(std::span<const double> x, double action) {
  if (x.size() != ItrConfig::kCovariates) throw std::invalid_argument("itr_mean_outcome: expected 10 covariates");
  return 1.0 + 2.0 * x[0] + x[1] + 0.5 * x[2] + (x[0] + x[1]) * action;
}

double true_blip(std::span<const double> x) {
  if (x.size() != ItrConfig::kCovariates) throw std::invalid_argument("true_blip: expected 10 covariates");
  return 2.0 * (x[0] + x[1]);
}

double true_optimal_action(std::span<const double> x) { return true_blip(x) > 0.0 ? 1.0 : -1.0; }

OfflineDataset simulate_itr(const ItrConfig& cfg) {
  cfg.check();
  OfflineDataset data;
  data.horizon = 0;
  data.action_spaces = {itr_action_space()};
  data.feature_dims = {ItrConfig::kCovariates};
  data.fixed_horizon = true;
  data.patients.reserve(cfg.n_patients);

  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    auto rng = make_stream(cfg.seed, "itr", i);
    StageRecord rec;
    rec.covariates.resize(ItrConfig::kCovariates);
    for (auto& x : rec.covariates) x = uniform(rng, -1.0, 1.0);
    rec.action_index = uniform01(rng) < 0.5 ? 1 : 0;
    const double a = rec.action_index == 1 ? 1.0 : -1.0;
    std::normal_distribution<double> noise(0.0, 1.0);
    const double z = noise(rng);
    rec.reward = itr_mean_outcome(rec.covariates, a) + cfg.noise_sd * z;
    data.patients.push_back(PatientTrajectory{static_cast<std::int64_t>(i), {std::move(rec)}});
  }
  return data;
}

}  // namespace nearq::envs
