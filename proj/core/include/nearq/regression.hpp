#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nearq/dataset.hpp"

namespace nearq::regression {

enum class Mode {
  // Q(x, a) = b0 + bX'x + bA a + bAX'(a x), with a the numeric action label.
  InteractionLinear,
  // One RBF kernel ridge model per action; the action is not a kernel input.
  PerActionKernel,
};

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct DesignSpec {
  Mode mode = Mode::InteractionLinear;
  // gamma in exp(-gamma |u - v|^2). Unset means 1 / (feature_dim + 1).
  std::optional<double> kernel_bandwidth;
  double ridge = 0.0;

  static DesignSpec interaction_linear(double ridge = 0.0);
  static DesignSpec per_action_kernel(std::optional<double> bandwidth = std::nullopt,
                                      double ridge = 1.0);

  /// Throws std::invalid_argument when the invariants do not hold.
  void check() const;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitInfo {
  std::size_t n_rows = 0;
  // Kernel mode: actions with no training rows, predicted by the global mean.
  std::vector<std::size_t> fallback_actions;
};

/// Immutable fitted Q-function over (features, action index).
class FittedQ {
 public:
  struct LinearParams {
    Eigen::VectorXd coefficients;  // [b0, bX(d), bA, bAX(d)]
  };
  struct KernelArm {
    Eigen::MatrixXd inputs;  // n_a x d training features
    Eigen::VectorXd dual;    // n_a dual weights
    double offset = 0.0;     // mean target of the arm
    bool fallback = false;
  };
  struct KernelParams {
    double gamma = 1.0;
    std::vector<KernelArm> arms;  // one per action
  };

  FittedQ(ActionSpace actions, std::size_t feature_dim, double ridge,
          std::variant<LinearParams, KernelParams> params, FitInfo info = {});

  Mode mode() const;
  const ActionSpace& action_space() const { return actions_; }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  double ridge() const { return ridge_; }
  const FitInfo& info() const { return info_; }

  double predict(std::span<const double> features, std::size_t action_index) const;
  std::vector<double> predict_all_actions(std::span<const double> features) const;

  /// Interaction-linear coefficients; throws std::logic_error in kernel mode.
  const Eigen::VectorXd& coefficients() const;
  const KernelParams& kernel() const;

  /// Versioned, self-describing text blob. Doubles are written in shortest
  /// round-trip form, so save/load is exact.
  void save(std::ostream& out) const;
  static FittedQ load(std::istream& in);

  bool operator==(const FittedQ& other) const;

 private:
  void check_query(std::span<const double> features) const;

  ActionSpace actions_;
  std::size_t feature_dim_;
  double ridge_;
  std::variant<LinearParams, KernelParams> params_;
  FitInfo info_;
};

/// Least-squares fit of `targets` on (features, actions). Rows of `features`
/// are observations. Deterministic for identical inputs.
FittedQ fit(const DesignSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& features,
            std::span<const std::size_t> actions, std::span<const double> targets,
            const ActionSpace& action_space);

/// Interaction-linear design row [1, x, a, a x].
Eigen::VectorXd interaction_row(std::span<const double> features, double action_label);

double rbf(const Eigen::Ref<const Eigen::RowVectorXd>& u, std::span<const double> v, double gamma);

}  // namespace nearq::regression
