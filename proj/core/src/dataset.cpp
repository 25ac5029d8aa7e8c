#include "nearq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nearq {

ActionSpace::ActionSpace(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("ActionSpace: empty action set");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("ActionSpace: non-finite action label");
  }
  std::vector<double> sorted = values_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("ActionSpace: duplicate action label");
  }
}

ActionSpace ActionSpace::integer_codes(std::size_t k) {
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = static_cast<double>(i);
  return ActionSpace(std::move(v));
}

std::optional<std::size_t> ActionSpace::index_of(double label, double tol) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::abs(values_[i] - label) <= tol) return i;
  }
  return std::nullopt;
}

bool ValidationReport::ok() const { return count(Severity::Error) == 0; }

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
}

std::size_t ValidationReport::count(Severity s) const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [&](const auto& i) { return i.severity == s; }));
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& issue : issues) {
    os << (issue.severity == Severity::Error ? "error" : "warning") << ": " << issue.code;
    if (issue.patient) os << " [patient " << *issue.patient;
    if (issue.stage) os << (issue.patient ? ", " : " [") << "stage " << *issue.stage;
    if (issue.patient || issue.stage) os << "]";
    if (!issue.message.empty()) os << ": " << issue.message;
    os << '\n';
  }
  return os.str();
}

ValidationReport validate(const OfflineDataset& dataset) {
  if (dataset.horizon < 0) throw DatasetError("dataset horizon is negative");
  const std::size_t stages = dataset.num_stages();
  if (dataset.action_spaces.size() != stages) {
    throw DatasetError("dataset declares " + std::to_string(dataset.action_spaces.size()) +
                       " action spaces for " + std::to_string(stages) + " stages");
  }
  if (dataset.feature_dims.size() != stages) {
    throw DatasetError("dataset declares " + std::to_string(dataset.feature_dims.size()) +
                       " feature dimensions for " + std::to_string(stages) + " stages");
  }

  ValidationReport report;
  auto add = [&](Severity s, std::string code, std::string msg, std::optional<std::size_t> p,
                 std::optional<int> t) {
    report.issues.push_back({s, std::move(code), std::move(msg), p, t});
  };

  if (dataset.patients.empty()) add(Severity::Error, "empty dataset", "no patients", {}, {});

  std::vector<std::set<std::size_t>> observed(stages);
  for (std::size_t i = 0; i < dataset.patients.size(); ++i) {
    const auto& traj = dataset.patients[i];
    if (traj.stages.empty()) {
      add(Severity::Error, "empty trajectory", "trajectory has no stages", i, {});
      continue;
    }
    if (traj.terminal_stage() > dataset.horizon) {
      add(Severity::Error, "trajectory too long",
          "terminal stage " + std::to_string(traj.terminal_stage()) + " exceeds horizon", i, {});
    }
    if (dataset.fixed_horizon && traj.terminal_stage() != dataset.horizon) {
      add(Severity::Error, "horizon mismatch",
          "trajectory ends at stage " + std::to_string(traj.terminal_stage()) +
              " in a fixed-horizon cohort with T=" + std::to_string(dataset.horizon),
          i, {});
    }
    const int last = std::min(traj.terminal_stage(), dataset.horizon);
    for (int t = 0; t <= last; ++t) {
      const auto st = static_cast<std::size_t>(t);
      const auto& rec = traj.stages[st];
      if (rec.covariates.size() != dataset.feature_dims[st]) {
        add(Severity::Error, "dimension mismatch",
            "expected " + std::to_string(dataset.feature_dims[st]) + " covariates, got " +
                std::to_string(rec.covariates.size()),
            i, t);
      }
      if (rec.action_index >= dataset.action_spaces[st].size()) {
        add(Severity::Error, "action out of range",
            "action index " + std::to_string(rec.action_index) + " with K=" +
                std::to_string(dataset.action_spaces[st].size()),
            i, t);
      } else {
        observed[st].insert(rec.action_index);
      }
      bool finite = std::isfinite(rec.reward);
      for (double c : rec.covariates) finite = finite && std::isfinite(c);
      if (!finite) add(Severity::Error, "non-finite value", "", i, t);
    }
  }

  if (!dataset.patients.empty()) {
    for (std::size_t t = 0; t < stages; ++t) {
      const int stage = static_cast<int>(t);
      if (observed[t].empty()) {
        add(Severity::Error, "empty stage", "no patient observed at this stage", {}, stage);
      } else if (observed[t].size() < 2 && dataset.action_spaces[t].size() >= 2) {
        add(Severity::Warning, "degenerate action support",
            "only one distinct action observed; regression is fit but under-identified", {},
            stage);
      }
    }
  }
  return report;
}

std::span<const double> history_features(const PatientTrajectory& trajectory, int t) {
  if (!trajectory.has_stage(t)) {
    throw std::out_of_range("history_features: stage " + std::to_string(t) +
                            " beyond terminal stage " +
                            std::to_string(trajectory.terminal_stage()));
  }
  return trajectory.stages[static_cast<std::size_t>(t)].covariates;
}

}  // namespace nearq
