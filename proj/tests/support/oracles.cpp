#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace nearq::oracle {

double brute_force_q(const tabular::TabularMdp& mdp, int t, std::size_t s, std::size_t a) {
  const auto st = static_cast<std::size_t>(t);
  double total = 0.0;
  for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
    const double p = static_cast<double>(mdp.counts[st][s][a][s2]) / static_cast<double>(mdp.denominator);
    if (p == 0.0) continue;
    double future = 0.0;
    if (t < mdp.horizon) {
      future = -std::numeric_limits<double>::infinity();
      for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2) future = std::max(future, brute_force_q(mdp, t + 1, s2, a2));
    }
    total += p * (mdp.rewards[st][s][a][s2] + future);
  }
  return total;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  return design.colPivHouseholderQr().solve(y);
}

Eigen::MatrixXd interaction_design(const Eigen::MatrixXd& features, std::span<const double> labels) {
  const auto n = features.rows();
  const auto d = features.cols();
  Eigen::MatrixXd z(n, 2 * d + 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = labels[static_cast<std::size_t>(i)];
    z(i, 0) = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      z(i, 1 + k) = features(i, k);
      z(i, d + 2 + k) = a * features(i, k);
    }
    z(i, d + 1) = a;
  }
  return z;
}

double kernel_ridge_predict(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& y, double gamma, double ridge,
                            std::span<const double> query) {
  const auto n = inputs.rows();
  auto k = [&](Eigen::Index i, const double* v) {
    double sq = 0.0;
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) sq += (inputs(i, c) - v[c]) * (inputs(i, c) - v[c]);
    return std::exp(-gamma * sq);
  };
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = k(i, inputs.row(j).eval().data());
    gram(i, i) += ridge;
  }
  const double offset = y.mean();
  const Eigen::VectorXd alpha = gram.fullPivLu().solve((y.array() - offset).matrix());
  double out = offset;
  for (Eigen::Index i = 0; i < n; ++i) out += alpha(i) * k(i, query.data());
  return out;
}

std::vector<Kept> admissible(std::span<const double> q, double epsilon, bool relative) {
  double best = q[0];
  for (double v : q) best = std::max(best, v);
  const double cut = relative ? best - epsilon * std::abs(best) : best - epsilon;
  std::vector<Kept> kept;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] >= cut) kept.push_back({i, q[i]});
  }
  for (std::size_t i = 1; i < kept.size(); ++i) {
    for (std::size_t j = i; j > 0 && kept[j].q > kept[j - 1].q; --j) std::swap(kept[j], kept[j - 1]);
  }
  return kept;
}

}  // namespace nearq::oracle
