#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "nearq/dataset.hpp"

namespace nearq::envs {

// Single-stage binary-treatment generator:
//   X_j ~ U[-1, 1] i.i.d. (j = 0..9), A = +/-1 with probability 1/2,
//   Y ~ N(1 + 2 X0 + X1 + 0.5 X2 + (X0 + X1) A, 1).

struct ItrConfig {
  static constexpr std::size_t kCovariates = 10;

  std::size_t n_patients = 1000;
  std::uint64_t seed = 0;
  double noise_sd = 1.0;  // 0 gives the noiseless mean outcome

  void check() const;
};

/// Labels {-1, +1}; index 0 is -1.
ActionSpace itr_action_space();

double itr_mean_outcome(std::span<const double> x, double action);

/// Q(X, +1) - Q(X, -1) under the generating model, i.e. 2 (X0 + X1).
double true_blip(std::span<const double> x);

/// sign(X0 + X1) as a label in {-1, +1}; the measure-zero boundary maps to -1.
double true_optimal_action(std::span<const double> x);

OfflineDataset simulate_itr(const ItrConfig& cfg);

}  // namespace nearq::envs
