#include "nearq/near_equiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "nearq/text_io.hpp"

namespace nearq::nearequiv {

std::string_view to_string(AdmissibilityMode mode) {
  return mode == AdmissibilityMode::Relative ? "relative" : "absolute";
}

AdmissibilityMode admissibility_mode_from_string(std::string_view text) {
  if (text == "relative") return AdmissibilityMode::Relative;
  if (text == "absolute") return AdmissibilityMode::Absolute;
  throw std::invalid_argument("unknown admissibility mode '" + std::string(text) + "'");
}

EpsilonConfig::EpsilonConfig(double epsilon, AdmissibilityMode mode) : epsilon_(epsilon), mode_(mode) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1), got " + format_double(epsilon));
  }
}

double EpsilonConfig::threshold(double max_q) const {
  return mode_ == AdmissibilityMode::Relative ? max_q - epsilon_ * std::abs(max_q) : max_q - epsilon_;
}

AdmissibleRow admissible_actions(std::span<const double> q_values, const EpsilonConfig& cfg) {
  if (q_values.empty()) throw std::invalid_argument("admissible_actions: empty action set");
  for (double q : q_values) {
    if (!std::isfinite(q)) throw std::domain_error("admissible_actions: non-finite Q-value");
  }
  const double bound = cfg.threshold(qlearn::max_value(q_values));
  AdmissibleRow row;
  for (std::size_t a = 0; a < q_values.size(); ++a) {
    if (q_values[a] >= bound) row.push_back({a, q_values[a]});
  }
  std::stable_sort(row.begin(), row.end(),
                   [](const AdmissibleEntry& x, const AdmissibleEntry& y) { return x.q_value > y.q_value; });
  return row;
}

std::size_t Selection::width(std::size_t patient) const {
  return reached_final[patient] ? rows[patient].size() : 1;
}

Selection pad_rows(std::vector<AdmissibleRow> rows, std::vector<bool> reached_final) {
  if (rows.size() != reached_final.size()) throw std::invalid_argument("pad_rows: size mismatch");
  Selection sel;
  sel.rows = std::move(rows);
  sel.reached_final = std::move(reached_final);
  const auto n = sel.rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (sel.reached_final[i] && sel.rows[i].empty()) throw std::invalid_argument("pad_rows: empty admissible row");
    sel.m = std::max(sel.m, sel.width(i));
  }
  sel.padded.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sel.m));
  sel.padding.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (!sel.reached_final[i]) {
      sel.padded.row(r).setZero();
      sel.padding[i] = sel.m - 1;
      continue;
    }
    const auto& row = sel.rows[i];
    for (std::size_t j = 0; j < sel.m; ++j) {
      sel.padded(r, static_cast<Eigen::Index>(j)) = j < row.size() ? row[j].q_value : row.front().q_value;
    }
    sel.padding[i] = sel.m - row.size();
  }
  return sel;
}

Selection select_and_pad(const FittedQ& final_model, const OfflineDataset& dataset, const EpsilonConfig& cfg) {
  const int T = dataset.horizon;
  std::vector<AdmissibleRow> rows(dataset.patients.size());
  std::vector<bool> reached(dataset.patients.size(), false);
  for (std::size_t i = 0; i < dataset.patients.size(); ++i) {
    const auto& traj = dataset.patients[i];
    if (!traj.has_stage(T)) continue;
    reached[i] = true;
    rows[i] = admissible_actions(final_model.predict_all_actions(history_features(traj, T)), cfg);
  }
  return pad_rows(std::move(rows), std::move(reached));
}

namespace {

qlearn::PseudoOutcomes empty_outcomes(std::size_t n, std::size_t m, int t) {
  qlearn::PseudoOutcomes out;
  out.stage = t;
  out.present.assign(n, false);
  out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m),
                                         std::numeric_limits<double>::quiet_NaN());
  return out;
}

}  // namespace

qlearn::PseudoOutcomes pseudo_outcome_matrix(const OfflineDataset& dataset, int t,
                                             const Eigen::Ref<const Eigen::MatrixXd>& padded) {
  if (t != dataset.horizon - 1) {
    throw std::invalid_argument("padded stage-T values only define targets at stage T-1");
  }
  const auto n = dataset.patients.size();
  if (static_cast<std::size_t>(padded.rows()) != n || padded.cols() < 1) {
    throw std::invalid_argument("pseudo_outcome_matrix: padded matrix has wrong shape");
  }
  const auto m = static_cast<std::size_t>(padded.cols());
  auto out = empty_outcomes(n, m, t);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& traj = dataset.patients[i];
    if (!traj.has_stage(t)) continue;
    out.present[i] = true;
    const double y = traj.stages[static_cast<std::size_t>(t)].reward;
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < m; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      out.values(r, c) = traj.has_stage(t + 1) ? y + padded(r, c) : y;
    }
  }
  return out;
}

qlearn::PseudoOutcomes pseudo_outcome_matrix(const OfflineDataset& dataset, int t,
                                             std::span<const FittedQ> next_column_models) {
  if (t < 0 || t >= dataset.horizon - 1) {
    throw std::invalid_argument("column-model targets are defined for stages t < T-1");
  }
  if (next_column_models.empty()) throw std::invalid_argument("pseudo_outcome_matrix: m must be >= 1");
  const auto n = dataset.patients.size();
  const auto m = next_column_models.size();
  auto out = empty_outcomes(n, m, t);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& traj = dataset.patients[i];
    if (!traj.has_stage(t)) continue;
    out.present[i] = true;
    const double y = traj.stages[static_cast<std::size_t>(t)].reward;
    const auto r = static_cast<Eigen::Index>(i);
    if (!traj.has_stage(t + 1)) {
      out.values.row(r).setConstant(y);
      continue;
    }
    const auto h = history_features(traj, t + 1);
    for (std::size_t j = 0; j < m; ++j) {
      out.values(r, static_cast<Eigen::Index>(j)) = y + qlearn::max_value(next_column_models[j].predict_all_actions(h));
    }
  }
  return out;
}

NearEquivQStack::NearEquivQStack(int horizon, EpsilonConfig cfg, FittedQ final_model,
                                 std::vector<std::vector<FittedQ>> column_models, Selection selection,
                                 std::vector<std::int64_t> patient_ids)
    : horizon_(horizon),
      cfg_(cfg),
      final_model_(std::move(final_model)),
      column_models_(std::move(column_models)),
      selection_(std::move(selection)),
      patient_ids_(std::move(patient_ids)) {
  if (horizon_ > 0) {
    if (column_models_.size() != selection_.m) throw std::invalid_argument("NearEquivQStack: expected m column chains");
    for (const auto& chain : column_models_) {
      if (chain.size() != static_cast<std::size_t>(horizon_)) {
        throw std::invalid_argument("NearEquivQStack: each chain needs one model per stage t < T");
      }
    }
  } else if (!column_models_.empty()) {
    throw std::invalid_argument("NearEquivQStack: a single-stage stack has no column chains");
  }
  if (selection_.m > final_model_.num_actions()) throw std::logic_error("NearEquivQStack: m exceeds |A_T|");
}

const FittedQ& NearEquivQStack::column_model(std::size_t j, int t) const {
  if (t < 0 || t >= horizon_) throw std::out_of_range("column_model: stage must be < T");
  return column_models_.at(j).at(static_cast<std::size_t>(t));
}

void NearEquivQStack::save(std::ostream& out) const {
  out << "nearq-nearequiv 1\n";
  out << "horizon " << horizon_ << '\n';
  out << "epsilon " << format_double(cfg_.epsilon()) << '\n';
  out << "mode " << to_string(cfg_.mode()) << '\n';
  out << "m " << selection_.m << '\n';
  out << "final\n";
  final_model_.save(out);
  for (std::size_t j = 0; j < column_models_.size(); ++j) {
    for (int t = 0; t < horizon_; ++t) {
      out << "column " << j + 1 << " stage " << t << '\n';
      column_models_[j][static_cast<std::size_t>(t)].save(out);
    }
  }
}

void NearEquivQStack::write_admissible_csv(std::ostream& out) const {
  out << "patient_id,rank,action_index,q_value\n";
  for (std::size_t i = 0; i < selection_.rows.size(); ++i) {
    if (!selection_.reached_final[i]) continue;
    const auto& row = selection_.rows[i];
    for (std::size_t r = 0; r < row.size(); ++r) {
      out << patient_ids_[i] << ',' << r + 1 << ',' << row[r].action_index << ',' << format_double(row[r].q_value)
          << '\n';
    }
  }
}

NearEquivQStack backward_fit_near_equiv(const OfflineDataset& dataset, const DesignSpec& spec,
                                        const EpsilonConfig& cfg) {
  const int T = dataset.horizon;
  FittedQ final_model = qlearn::fit_final_stage(dataset, spec);
  Selection selection = select_and_pad(final_model, dataset, cfg);
  const std::size_t m = selection.m;

  std::vector<std::int64_t> ids;
  ids.reserve(dataset.patients.size());
  for (const auto& p : dataset.patients) ids.push_back(p.id);

  std::vector<std::vector<FittedQ>> chains;
  if (T == 0) {
    return NearEquivQStack(T, cfg, std::move(final_model), std::move(chains), std::move(selection), std::move(ids));
  }

  // Models are produced from T-1 down to 0; stored front-to-back afterwards.
  std::vector<std::vector<FittedQ>> reversed(m);
  for (int t = T - 1; t >= 0; --t) {
    const auto rows = qlearn::collect_stage(dataset, t);
    if (rows.patients.empty()) throw qlearn::FitError(t, std::nullopt, "no patient observed at this stage");
    qlearn::PseudoOutcomes targets;
    if (t == T - 1) {
      targets = pseudo_outcome_matrix(dataset, t, selection.padded);
    } else {
      std::vector<FittedQ> next;
      next.reserve(m);
      for (std::size_t j = 0; j < m; ++j) next.push_back(reversed[j].back());
      targets = pseudo_outcome_matrix(dataset, t, next);
    }
    for (std::size_t j = 0; j < m; ++j) {
      try {
        reversed[j].push_back(
            regression::fit(spec, rows.features, rows.actions, targets.column_targets(j), dataset.actions(t)));
      } catch (const std::exception& e) {
        throw qlearn::FitError(t, j, e.what());
      }
    }
  }
  for (auto& chain : reversed) {
    std::reverse(chain.begin(), chain.end());
    chains.push_back(std::move(chain));
  }
  return NearEquivQStack(T, cfg, std::move(final_model), std::move(chains), std::move(selection), std::move(ids));
}

std::size_t PolicySet::decide(std::size_t j, int t, std::span<const double> features) const {
  if (j >= size()) throw std::out_of_range("PolicySet::decide: strategy index out of range");
  if (t == stack_->horizon()) return qlearn::argmax_lowest(stack_->final_model().predict_all_actions(features));
  return qlearn::argmax_lowest(stack_->column_model(j, t).predict_all_actions(features));
}

AdmissibleRow PolicySet::admissible_at_final(std::span<const double> features) const {
  return admissible_actions(stack_->final_model().predict_all_actions(features), stack_->config());
}

PolicySet policy_set(const NearEquivQStack& stack) { return PolicySet(stack); }

}  // namespace nearq::nearequiv
