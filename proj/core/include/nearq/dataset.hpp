#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nearq {

/// Finite, ordered set of treatment labels for one decision stage.
///
/// Labels are real numbers (doses, or the -1/+1 codes of a binary
/// treatment). Indices 0..K-1 follow construction order and never change.
class ActionSpace {
 public:
  explicit ActionSpace(std::vector<double> values);

  /// Labels 0, 1, ..., k-1.
  static ActionSpace integer_codes(std::size_t k);

  std::size_t size() const { return values_.size(); }
  double value(std::size_t index) const { return values_.at(index); }
  std::span<const double> values() const { return values_; }
  std::optional<std::size_t> index_of(double label, double tol = 1e-9) const;

  bool operator==(const ActionSpace&) const = default;

 private:
  std::vector<double> values_;
};

struct StageRecord {
  std::vector<double> covariates;
  std::size_t action_index = 0;
  double reward = 0.0;

  bool operator==(const StageRecord&) const = default;
};

/// One patient's observed stages 0..terminal_stage(). A trajectory shorter
/// than the horizon ended in an absorbing event (death).
struct PatientTrajectory {
  std::int64_t id = 0;
  std::vector<StageRecord> stages;

  int terminal_stage() const { return static_cast<int>(stages.size()) - 1; }
  bool has_stage(int t) const { return t >= 0 && t <= terminal_stage(); }

  bool operator==(const PatientTrajectory&) const = default;
};

struct OfflineDataset {
  std::vector<PatientTrajectory> patients;
  int horizon = 0;  // final decision stage T
  std::vector<ActionSpace> action_spaces;  // one per stage 0..T
  std::vector<std::size_t> feature_dims;  // one per stage 0..T
  // When set, every trajectory must reach stage T.
  bool fixed_horizon = false;

  std::size_t size() const { return patients.size(); }
  std::size_t num_stages() const { return static_cast<std::size_t>(horizon) + 1; }
  const ActionSpace& actions(int t) const { return action_spaces.at(static_cast<std::size_t>(t)); }

  bool operator==(const OfflineDataset&) const = default;
};

/// Thrown when a dataset is structurally unusable (the stage tables do not
/// even agree on the horizon), or when a loaded file fails validation.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Severity { Warning, Error };

struct ValidationIssue {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::optional<std::size_t> patient;
  std::optional<int> stage;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const;  // no Error-severity issues
  bool empty() const { return issues.empty(); }
  bool has(std::string_view code) const;
  std::size_t count(Severity s) const;
  std::string to_string() const;
};

/// Checks dimensions, action bounds, horizon consistency and action support.
/// Throws DatasetError only on structural corruption of the per-stage tables.
ValidationReport validate(const OfflineDataset& dataset);

/// Regression input at stage t. The Markov convention is used throughout:
/// the features are the stage-t covariates.
std::span<const double> history_features(const PatientTrajectory& trajectory, int t);

}  // namespace nearq
