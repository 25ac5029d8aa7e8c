#include "nearq/regression.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "nearq/text_io.hpp"

namespace nearq::regression {

namespace {

constexpr std::string_view kMagic = "nearq-fittedq";
constexpr int kFormatVersion = 1;

// Relative pivot floor below which an SPD factorization is treated as singular.
constexpr double kPivotFloor = 1e-12;

Eigen::VectorXd spd_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const double scale = gram.rows() ? gram.diagonal().cwiseAbs().maxCoeff() : 0.0;
  bool singular = llt.info() != Eigen::Success || scale <= 0.0;
  if (!singular) {
    const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
    singular = pivots.cwiseAbs2().minCoeff() <= kPivotFloor * scale;
  }
  if (singular) {
    throw RankDeficientError(
        "rank-deficient design: normal equations are singular; use ridge > 0 or more data");
  }
  return llt.solve(rhs);
}

FittedQ fit_linear(const DesignSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& features,
                   std::span<const std::size_t> actions, std::span<const double> targets,
                   const ActionSpace& space) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto d = static_cast<std::size_t>(features.cols());
  const Eigen::Index p = static_cast<Eigen::Index>(2 * d + 2);

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), p);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) row[k] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    design.row(static_cast<Eigen::Index>(i)) = interaction_row(row, space.value(actions[i])).transpose();
  }
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(n));

  Eigen::MatrixXd gram = design.transpose() * design;
  gram.diagonal().array() += spec.ridge;
  const Eigen::VectorXd rhs = design.transpose() * y;

  FitInfo info;
  info.n_rows = n;
  return FittedQ(space, d, spec.ridge, FittedQ::LinearParams{spd_solve(gram, rhs)}, info);
}

FittedQ fit_kernel(const DesignSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& features,
                   std::span<const std::size_t> actions, std::span<const double> targets,
                   const ActionSpace& space) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto d = static_cast<std::size_t>(features.cols());
  const double gamma = spec.kernel_bandwidth.value_or(1.0 / static_cast<double>(d + 1));
  const double global_mean =
      n ? std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n) : 0.0;

  FitInfo info;
  info.n_rows = n;
  FittedQ::KernelParams params;
  params.gamma = gamma;
  params.arms.resize(space.size());

  for (std::size_t a = 0; a < space.size(); ++a) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (actions[i] == a) rows.push_back(static_cast<Eigen::Index>(i));
    }
    auto& arm = params.arms[a];
    if (rows.empty()) {
      arm.inputs.resize(0, static_cast<Eigen::Index>(d));
      arm.offset = global_mean;
      arm.fallback = true;
      info.fallback_actions.push_back(a);
      continue;
    }
    const auto na = static_cast<Eigen::Index>(rows.size());
    arm.inputs.resize(na, static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(na);
    for (Eigen::Index r = 0; r < na; ++r) {
      arm.inputs.row(r) = features.row(rows[static_cast<std::size_t>(r)]);
      y(r) = targets[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
    }
    arm.offset = y.mean();
    Eigen::MatrixXd gram(na, na);
    for (Eigen::Index r = 0; r < na; ++r) {
      gram(r, r) = 1.0;
      for (Eigen::Index c = 0; c < r; ++c) {
        const double k = std::exp(-gamma * (arm.inputs.row(r) - arm.inputs.row(c)).squaredNorm());
        gram(r, c) = k;
        gram(c, r) = k;
      }
    }
    gram.diagonal().array() += spec.ridge;
    arm.dual = spd_solve(gram, (y.array() - arm.offset).matrix());
  }
  return FittedQ(space, d, spec.ridge, std::move(params), std::move(info));
}

void expect(std::istream& in, std::string_view word) {
  std::string tok;
  if (!(in >> tok) || tok != word) {
    throw std::runtime_error("FittedQ::load: expected '" + std::string(word) + "', got '" + tok + "'");
  }
}

double read_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("FittedQ::load: unexpected end of input");
  return parse_double(tok);
}

std::size_t read_size(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("FittedQ::load: unexpected end of input");
  const auto v = parse_int(tok);
  if (v < 0) throw std::runtime_error("FittedQ::load: negative count");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::InteractionLinear ? "interaction-linear" : "per-action-kernel";
}

Mode mode_from_string(std::string_view text) {
  if (text == "interaction-linear") return Mode::InteractionLinear;
  if (text == "per-action-kernel") return Mode::PerActionKernel;
  throw std::invalid_argument("unknown regression mode '" + std::string(text) + "'");
}

DesignSpec DesignSpec::interaction_linear(double ridge) {
  return DesignSpec{Mode::InteractionLinear, std::nullopt, ridge};
}

DesignSpec DesignSpec::per_action_kernel(std::optional<double> bandwidth, double ridge) {
  return DesignSpec{Mode::PerActionKernel, bandwidth, ridge};
}

void DesignSpec::check() const {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw std::invalid_argument("ridge must be >= 0");
  if (mode == Mode::PerActionKernel && kernel_bandwidth &&
      !(*kernel_bandwidth > 0.0 && std::isfinite(*kernel_bandwidth))) {
    throw std::invalid_argument("kernel_bandwidth must be > 0");
  }
}

Eigen::VectorXd interaction_row(std::span<const double> features, double action_label) {
  const auto d = static_cast<Eigen::Index>(features.size());
  Eigen::VectorXd row(2 * d + 2);
  row(0) = 1.0;
  for (Eigen::Index k = 0; k < d; ++k) row(1 + k) = features[static_cast<std::size_t>(k)];
  row(d + 1) = action_label;
  for (Eigen::Index k = 0; k < d; ++k) row(d + 2 + k) = action_label * features[static_cast<std::size_t>(k)];
  return row;
}

double rbf(const Eigen::Ref<const Eigen::RowVectorXd>& u, std::span<const double> v, double gamma) {
  double sq = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double diff = u(k) - v[static_cast<std::size_t>(k)];
    sq += diff * diff;
  }
  return std::exp(-gamma * sq);
}

FittedQ fit(const DesignSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& features,
            std::span<const std::size_t> actions, std::span<const double> targets,
            const ActionSpace& action_space) {
  spec.check();
  const auto n = static_cast<std::size_t>(features.rows());
  if (n == 0) throw std::invalid_argument("fit: no training rows");
  if (actions.size() != n || targets.size() != n) {
    throw std::invalid_argument("fit: features, actions and targets disagree on row count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (actions[i] >= action_space.size()) throw std::invalid_argument("fit: action index out of range");
    if (!std::isfinite(targets[i])) throw std::invalid_argument("fit: non-finite target");
  }
  return spec.mode == Mode::InteractionLinear ? fit_linear(spec, features, actions, targets, action_space)
                                              : fit_kernel(spec, features, actions, targets, action_space);
}

FittedQ::FittedQ(ActionSpace actions, std::size_t feature_dim, double ridge,
                 std::variant<LinearParams, KernelParams> params, FitInfo info)
    : actions_(std::move(actions)),
      feature_dim_(feature_dim),
      ridge_(ridge),
      params_(std::move(params)),
      info_(std::move(info)) {
  if (const auto* lin = std::get_if<LinearParams>(&params_)) {
    if (lin->coefficients.size() != static_cast<Eigen::Index>(2 * feature_dim_ + 2)) {
      throw std::invalid_argument("FittedQ: coefficient count does not match feature dimension");
    }
  } else if (std::get<KernelParams>(params_).arms.size() != actions_.size()) {
    throw std::invalid_argument("FittedQ: kernel arms do not match action space");
  }
}

Mode FittedQ::mode() const {
  return std::holds_alternative<LinearParams>(params_) ? Mode::InteractionLinear : Mode::PerActionKernel;
}

void FittedQ::check_query(std::span<const double> features) const {
  if (features.size() != feature_dim_) {
    throw std::invalid_argument("predict: expected " + std::to_string(feature_dim_) +
                                " features, got " + std::to_string(features.size()));
  }
}

double FittedQ::predict(std::span<const double> features, std::size_t action_index) const {
  check_query(features);
  if (action_index >= actions_.size()) throw std::out_of_range("predict: action index out of range");
  if (const auto* lin = std::get_if<LinearParams>(&params_)) {
    return interaction_row(features, actions_.value(action_index)).dot(lin->coefficients);
  }
  const auto& kp = std::get<KernelParams>(params_);
  const auto& arm = kp.arms[action_index];
  double value = arm.offset;
  for (Eigen::Index r = 0; r < arm.inputs.rows(); ++r) {
    value += arm.dual(r) * rbf(arm.inputs.row(r), features, kp.gamma);
  }
  return value;
}

std::vector<double> FittedQ::predict_all_actions(std::span<const double> features) const {
  std::vector<double> out(actions_.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = predict(features, a);
  return out;
}

const Eigen::VectorXd& FittedQ::coefficients() const {
  if (const auto* lin = std::get_if<LinearParams>(&params_)) return lin->coefficients;
  throw std::logic_error("coefficients() requires an interaction-linear model");
}

const FittedQ::KernelParams& FittedQ::kernel() const {
  if (const auto* kp = std::get_if<KernelParams>(&params_)) return *kp;
  throw std::logic_error("kernel() requires a per-action-kernel model");
}

bool FittedQ::operator==(const FittedQ& other) const {
  if (!(actions_ == other.actions_) || feature_dim_ != other.feature_dim_ || ridge_ != other.ridge_ ||
      mode() != other.mode()) {
    return false;
  }
  if (mode() == Mode::InteractionLinear) return coefficients() == other.coefficients();
  const auto& a = kernel();
  const auto& b = other.kernel();
  if (a.gamma != b.gamma) return false;
  for (std::size_t k = 0; k < a.arms.size(); ++k) {
    const auto& x = a.arms[k];
    const auto& y = b.arms[k];
    if (x.offset != y.offset || x.fallback != y.fallback || x.inputs.rows() != y.inputs.rows() ||
        x.inputs != y.inputs || x.dual != y.dual) {
      return false;
    }
  }
  return true;
}

void FittedQ::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "mode " << to_string(mode()) << '\n';
  out << "feature_dim " << feature_dim_ << '\n';
  out << "actions " << actions_.size();
  for (double v : actions_.values()) out << ' ' << format_double(v);
  out << '\n';
  out << "ridge " << format_double(ridge_) << '\n';
  if (const auto* lin = std::get_if<LinearParams>(&params_)) {
    out << "coefficients " << lin->coefficients.size();
    for (Eigen::Index k = 0; k < lin->coefficients.size(); ++k) out << ' ' << format_double(lin->coefficients(k));
    out << '\n';
  } else {
    const auto& kp = std::get<KernelParams>(params_);
    out << "gamma " << format_double(kp.gamma) << '\n';
    for (std::size_t a = 0; a < kp.arms.size(); ++a) {
      const auto& arm = kp.arms[a];
      out << "arm " << a << ' ' << arm.inputs.rows() << ' ' << format_double(arm.offset) << ' '
          << (arm.fallback ? 1 : 0) << '\n';
      for (Eigen::Index r = 0; r < arm.inputs.rows(); ++r) {
        for (Eigen::Index k = 0; k < arm.inputs.cols(); ++k) out << format_double(arm.inputs(r, k)) << ' ';
        out << format_double(arm.dual(r)) << '\n';
      }
    }
  }
  out << "end\n";
}

FittedQ FittedQ::load(std::istream& in) {
  expect(in, kMagic);
  if (read_size(in) != kFormatVersion) throw std::runtime_error("FittedQ::load: unsupported format version");
  expect(in, "mode");
  std::string mode_text;
  in >> mode_text;
  const Mode mode = mode_from_string(mode_text);
  expect(in, "feature_dim");
  const auto d = read_size(in);
  expect(in, "actions");
  std::vector<double> labels(read_size(in));
  for (auto& v : labels) v = read_double(in);
  ActionSpace space(std::move(labels));
  expect(in, "ridge");
  const double ridge = read_double(in);

  if (mode == Mode::InteractionLinear) {
    expect(in, "coefficients");
    Eigen::VectorXd beta(static_cast<Eigen::Index>(read_size(in)));
    for (Eigen::Index k = 0; k < beta.size(); ++k) beta(k) = read_double(in);
    expect(in, "end");
    return FittedQ(std::move(space), d, ridge, LinearParams{std::move(beta)});
  }

  expect(in, "gamma");
  KernelParams kp;
  kp.gamma = read_double(in);
  kp.arms.resize(space.size());
  FitInfo info;
  for (std::size_t a = 0; a < space.size(); ++a) {
    expect(in, "arm");
    if (read_size(in) != a) throw std::runtime_error("FittedQ::load: arms out of order");
    const auto rows = static_cast<Eigen::Index>(read_size(in));
    auto& arm = kp.arms[a];
    arm.offset = read_double(in);
    arm.fallback = read_size(in) != 0;
    if (arm.fallback) info.fallback_actions.push_back(a);
    arm.inputs.resize(rows, static_cast<Eigen::Index>(d));
    arm.dual.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k) arm.inputs(r, k) = read_double(in);
      arm.dual(r) = read_double(in);
    }
    info.n_rows += static_cast<std::size_t>(rows);
  }
  expect(in, "end");
  return FittedQ(std::move(space), d, ridge, std::move(kp), std::move(info));
}

}  // namespace nearq::regression
