#include "nearq/qlearn.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "nearq/text_io.hpp"

namespace nearq::qlearn {

namespace {

std::string annotate(int stage, std::optional<std::size_t> column, const std::string& cause) {
  std::string where = "stage " + std::to_string(stage);
  if (column) where += ", column " + std::to_string(*column + 1);
  return "fit failed at " + where + ": " + cause;
}

}  // namespace

FitError::FitError(int stage, std::optional<std::size_t> column, const std::string& cause)
    : std::runtime_error(annotate(stage, column, cause)), stage_(stage), column_(column) {}

StageRows collect_stage(const OfflineDataset& dataset, int t) {
  StageRows rows;
  const auto d = static_cast<Eigen::Index>(dataset.feature_dims.at(static_cast<std::size_t>(t)));
  for (std::size_t i = 0; i < dataset.patients.size(); ++i) {
    if (dataset.patients[i].has_stage(t)) rows.patients.push_back(i);
  }
  rows.features.resize(static_cast<Eigen::Index>(rows.patients.size()), d);
  rows.actions.reserve(rows.patients.size());
  rows.rewards.reserve(rows.patients.size());
  for (std::size_t r = 0; r < rows.patients.size(); ++r) {
    const auto& traj = dataset.patients[rows.patients[r]];
    const auto h = history_features(traj, t);
    for (Eigen::Index k = 0; k < d; ++k) rows.features(static_cast<Eigen::Index>(r), k) = h[static_cast<std::size_t>(k)];
    const auto& rec = traj.stages[static_cast<std::size_t>(t)];
    rows.actions.push_back(rec.action_index);
    rows.rewards.push_back(rec.reward);
  }
  return rows;
}

std::vector<double> PseudoOutcomes::column_targets(std::size_t j) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i]) out.push_back(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  return out;
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax over an empty set");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

double max_value(std::span<const double> values) { return values[argmax_lowest(values)]; }

FittedQ fit_final_stage(const OfflineDataset& dataset, const DesignSpec& spec) {
  const int T = dataset.horizon;
  const auto rows = collect_stage(dataset, T);
  if (rows.patients.empty()) throw FitError(T, std::nullopt, "empty final stage: no patient reaches stage T");
  try {
    return regression::fit(spec, rows.features, rows.actions, rows.rewards, dataset.actions(T));
  } catch (const FitError&) {
    throw;
  } catch (const std::exception& e) {
    throw FitError(T, std::nullopt, e.what());
  }
}

PseudoOutcomes pseudo_outcome_vector(const OfflineDataset& dataset, int t, const FittedQ& next_model) {
  if (t < 0 || t >= dataset.horizon) {
    throw std::invalid_argument("pseudo_outcome_vector: stage " + std::to_string(t) +
                                " has no future stage (T=" + std::to_string(dataset.horizon) + ")");
  }
  const auto n = dataset.patients.size();
  PseudoOutcomes out;
  out.stage = t;
  out.present.assign(n, false);
  out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), 1, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& traj = dataset.patients[i];
    if (!traj.has_stage(t)) continue;
    out.present[i] = true;
    const double y = traj.stages[static_cast<std::size_t>(t)].reward;
    if (!traj.has_stage(t + 1)) {
      out.values(static_cast<Eigen::Index>(i), 0) = y;
      continue;
    }
    const auto q = next_model.predict_all_actions(history_features(traj, t + 1));
    out.values(static_cast<Eigen::Index>(i), 0) = y + max_value(q);
  }
  return out;
}

QStack::QStack(int horizon, std::vector<FittedQ> models, std::vector<Provenance> provenance)
    : horizon_(horizon), models_(std::move(models)), provenance_(std::move(provenance)) {
  if (horizon_ < 0 || models_.size() != static_cast<std::size_t>(horizon_) + 1 ||
      provenance_.size() != models_.size()) {
    throw std::invalid_argument("QStack: expected exactly T+1 models");
  }
}

QStack backward_fit(const OfflineDataset& dataset, const DesignSpec& spec) {
  const int T = dataset.horizon;
  std::vector<std::optional<FittedQ>> models(static_cast<std::size_t>(T) + 1);
  std::vector<Provenance> provenance(static_cast<std::size_t>(T) + 1);

  models[static_cast<std::size_t>(T)] = fit_final_stage(dataset, spec);
  provenance[static_cast<std::size_t>(T)] = {T, std::nullopt};

  for (int t = T - 1; t >= 0; --t) {
    const auto& next = *models[static_cast<std::size_t>(t) + 1];
    const auto targets = pseudo_outcome_vector(dataset, t, next);
    const auto rows = collect_stage(dataset, t);
    if (rows.patients.empty()) throw FitError(t, std::nullopt, "no patient observed at this stage");
    try {
      models[static_cast<std::size_t>(t)] =
          regression::fit(spec, rows.features, rows.actions, targets.column_targets(0), dataset.actions(t));
    } catch (const std::exception& e) {
      throw FitError(t, std::nullopt, e.what());
    }
    provenance[static_cast<std::size_t>(t)] = {t, t + 1};
  }

  std::vector<FittedQ> fitted;
  fitted.reserve(models.size());
  for (auto& m : models) fitted.push_back(std::move(*m));
  return QStack(T, std::move(fitted), std::move(provenance));
}

std::size_t greedy_action(const QStack& stack, int t, std::span<const double> features) {
  return argmax_lowest(stack.model(t).predict_all_actions(features));
}

void QStack::save(std::ostream& out) const {
  out << "nearq-qstack 1\n";
  out << "horizon " << horizon_ << '\n';
  for (int t = 0; t <= horizon_; ++t) {
    const auto& p = provenance_[static_cast<std::size_t>(t)];
    out << "stage " << t << " targets_from " << (p.targets_from ? std::to_string(*p.targets_from) : "-") << '\n';
    models_[static_cast<std::size_t>(t)].save(out);
  }
}

QStack QStack::load(std::istream& in) {
  std::string tok;
  int version = 0;
  if (!(in >> tok >> version) || tok != "nearq-qstack" || version != 1) {
    throw std::runtime_error("QStack::load: not a version-1 qstack blob");
  }
  int horizon = -1;
  if (!(in >> tok >> horizon) || tok != "horizon" || horizon < 0) {
    throw std::runtime_error("QStack::load: missing horizon");
  }
  std::vector<FittedQ> models;
  std::vector<Provenance> provenance;
  for (int t = 0; t <= horizon; ++t) {
    int stage = -1;
    std::string key, from;
    if (!(in >> tok >> stage >> key >> from) || tok != "stage" || stage != t || key != "targets_from") {
      throw std::runtime_error("QStack::load: malformed stage header");
    }
    provenance.push_back({t, from == "-" ? std::nullopt : std::optional<int>(static_cast<int>(parse_int(from)))});
    models.push_back(FittedQ::load(in));
  }
  return QStack(horizon, std::move(models), std::move(provenance));
}

}  // namespace nearq::qlearn
