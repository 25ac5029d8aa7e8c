#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "nearq/dataset.hpp"
#include "nearq/qlearn.hpp"
#include "nearq/regression.hpp"

namespace nearq::nearequiv {

using regression::DesignSpec;
using regression::FittedQ;

enum class AdmissibilityMode {
  // keep a if Q(a) >= max Q - eps * |max Q|
  Relative,
  // keep a if Q(a) >= max Q - eps (the blip band |delta| <= eps for K = 2)
  Absolute,
};

std::string_view to_string(AdmissibilityMode mode);
AdmissibilityMode admissibility_mode_from_string(std::string_view text);

/// Tolerance for near-optimal actions. epsilon must lie in [0, 1); at 1 the
/// relative criterion no longer separates near-optimal from arbitrary actions.
class EpsilonConfig {
 public:
  explicit EpsilonConfig(double epsilon, AdmissibilityMode mode = AdmissibilityMode::Relative);

  double epsilon() const { return epsilon_; }
  AdmissibilityMode mode() const { return mode_; }

  /// Smallest Q-value still admissible when the best value is `max_q`.
  double threshold(double max_q) const;

 private:
  double epsilon_;
  AdmissibilityMode mode_;
};

struct AdmissibleEntry {
  std::size_t action_index = 0;
  double q_value = 0.0;

  bool operator==(const AdmissibleEntry&) const = default;
};

/// Admissible actions of one patient, best first (ties by lower index).
using AdmissibleRow = std::vector<AdmissibleEntry>;

AdmissibleRow admissible_actions(std::span<const double> q_values, const EpsilonConfig& cfg);

/// Stage-T selection for every training patient, padded to a common width m.
struct Selection {
  std::vector<AdmissibleRow> rows;  // empty row for patients who never reach T
  std::vector<bool> reached_final;
  std::size_t m = 0;
  Eigen::MatrixXd padded;  // N x m
  std::vector<std::size_t> padding;  // padded entries per patient

  std::size_t width(std::size_t patient) const;  // n_i (1 for patients dead before T)
};

/// Pads each row with copies of its rank-1 value up to m = max n_i. A row
/// flagged as not reaching T counts as n_i = 1 with value 0.
Selection pad_rows(std::vector<AdmissibleRow> rows, std::vector<bool> reached_final);

Selection select_and_pad(const FittedQ& final_model, const OfflineDataset& dataset, const EpsilonConfig& cfg);

/// Stage T-1 targets: Y + padded(i, j).
qlearn::PseudoOutcomes pseudo_outcome_matrix(const OfflineDataset& dataset, int t,
                                             const Eigen::Ref<const Eigen::MatrixXd>& padded);

/// Stage t < T-1 targets: Y + max_a Q^j_{t+1}(h_{t+1}, a) for each column j.
qlearn::PseudoOutcomes pseudo_outcome_matrix(const OfflineDataset& dataset, int t,
                                             std::span<const FittedQ> next_column_models);

class NearEquivQStack {
 public:
  NearEquivQStack(int horizon, EpsilonConfig cfg, FittedQ final_model,
                  std::vector<std::vector<FittedQ>> column_models, Selection selection,
                  std::vector<std::int64_t> patient_ids);

  int horizon() const { return horizon_; }
  const EpsilonConfig& config() const { return cfg_; }
  std::size_t m() const { return selection_.m; }
  const FittedQ& final_model() const { return final_model_; }
  /// Column j (0-based) model at stage t < T.
  const FittedQ& column_model(std::size_t j, int t) const;
  std::span<const FittedQ> column(std::size_t j) const { return column_models_.at(j); }
  const Selection& selection() const { return selection_; }
  std::span<const std::int64_t> patient_ids() const { return patient_ids_; }

  void save(std::ostream& out) const;
  /// patient_id,rank,action_index,q_value
  void write_admissible_csv(std::ostream& out) const;

 private:
  int horizon_;
  EpsilonConfig cfg_;
  FittedQ final_model_;
  std::vector<std::vector<FittedQ>> column_models_;  // m x T
  Selection selection_;
  std::vector<std::int64_t> patient_ids_;
};

/// Fits Q_T once, selects at the penultimate stage, then runs m independent
/// backward chains over the columns of the pseudo-outcome matrix.
NearEquivQStack backward_fit_near_equiv(const OfflineDataset& dataset, const DesignSpec& spec,
                                        const EpsilonConfig& cfg);

/// The m near-equivalent strategies. Strategy j is greedy on the column-j
/// chain before T and on the shared final model at T.
class PolicySet {
 public:
  explicit PolicySet(const NearEquivQStack& stack) : stack_(&stack) {}

  std::size_t size() const { return stack_->m(); }
  int horizon() const { return stack_->horizon(); }
  std::size_t decide(std::size_t j, int t, std::span<const double> features) const;
  /// Set-valued rule at the final stage (what a single-stage problem reduces to).
  AdmissibleRow admissible_at_final(std::span<const double> features) const;

 private:
  const NearEquivQStack* stack_;
};

PolicySet policy_set(const NearEquivQStack& stack);

}  // namespace nearq::nearequiv
