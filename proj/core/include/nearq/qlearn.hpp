#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nearq/dataset.hpp"
#include "nearq/regression.hpp"

namespace nearq::qlearn {

using regression::DesignSpec;
using regression::FittedQ;

/// A regression failure annotated with where in the recursion it happened.
class FitError : public std::runtime_error {
 public:
  FitError(int stage, std::optional<std::size_t> column, const std::string& cause);

  int stage() const { return stage_; }
  std::optional<std::size_t> column() const { return column_; }

 private:
  int stage_;
  std::optional<std::size_t> column_;
};

/// Design rows for the patients observed at stage t.
struct StageRows {
  std::vector<std::size_t> patients;  // indices into dataset.patients
  Eigen::MatrixXd features;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
};

StageRows collect_stage(const OfflineDataset& dataset, int t);

/// Regression targets at one stage. Rows of patients not observed at that
/// stage are absent (present[i] == false, values NaN).
struct PseudoOutcomes {
  int stage = 0;
  std::vector<bool> present;
  Eigen::MatrixXd values;  // N x m

  std::size_t columns() const { return static_cast<std::size_t>(values.cols()); }
  /// Targets of column j, in the row order of collect_stage(dataset, stage).
  std::vector<double> column_targets(std::size_t j) const;
};

/// Lowest index among the maximal entries.
std::size_t argmax_lowest(std::span<const double> values);
double max_value(std::span<const double> values);

FittedQ fit_final_stage(const OfflineDataset& dataset, const DesignSpec& spec);

/// Y_t + max_a Q_{t+1}(h_{t+1}, a); Y_t alone for patients who die at t.
PseudoOutcomes pseudo_outcome_vector(const OfflineDataset& dataset, int t, const FittedQ& next_model);

struct Provenance {
  int stage = 0;
  std::optional<int> targets_from;  // stage of the model used for the targets
};

class QStack {
 public:
  QStack(int horizon, std::vector<FittedQ> models, std::vector<Provenance> provenance);

  int horizon() const { return horizon_; }
  const FittedQ& model(int t) const { return models_.at(static_cast<std::size_t>(t)); }
  std::span<const FittedQ> models() const { return models_; }
  std::span<const Provenance> provenance() const { return provenance_; }

  void save(std::ostream& out) const;
  static QStack load(std::istream& in);

 private:
  int horizon_;
  std::vector<FittedQ> models_;
  std::vector<Provenance> provenance_;
};

/// Fits stages T, T-1, ..., 0 on stagewise pseudo-outcomes.
QStack backward_fit(const OfflineDataset& dataset, const DesignSpec& spec);

std::size_t greedy_action(const QStack& stack, int t, std::span<const double> features);

class GreedyPolicy {
 public:
  explicit GreedyPolicy(const QStack& stack) : stack_(&stack) {}

  std::size_t decide(int t, std::span<const double> features) const {
    return greedy_action(*stack_, t, features);
  }
  int horizon() const { return stack_->horizon(); }

 private:
  const QStack* stack_;
};

}  // namespace nearq::qlearn
