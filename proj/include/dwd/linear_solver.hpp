#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dwd/dataset.hpp"

namespace dwd {

struct LinearModel {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double q = 1.0;
  double lambda = 1.0;

  /// beta0 + X beta.
  [[nodiscard]] Eigen::VectorXd decision_values(const Eigen::MatrixXd& x) const;
};

struct FitReport {
  int iterations = 0;
  bool converged = false;
  /// Objective before the first step and after every step.
  std::vector<double> objective_trace;
  double final_objective = 0.0;
  /// Infinity norm of the objective gradient at the returned point.
  double kkt_residual = 0.0;
  /// (M/n) * ||P||_inf; the gradient is bounded by this times the last step size.
  double gradient_scale = 0.0;
  /// Diagonal jitter that had to be added to the system matrix (0 when none).
  double jitter = 0.0;
};

struct SolverConfig {
  /// Stop when the largest absolute coefficient change falls below this.
  double tol = 1e-5;
  int max_iter = 10000;
  /// Diagonal shift added to the system matrix before the first factorization attempt.
  double jitter = 0.0;

  void validate() const;
};

struct LinearFit {
  LinearModel model;
  FitReport report;
};

/// (1/n) sum w_i V_q(y_i (beta0 + x_i'beta)) + lambda beta'beta.
[[nodiscard]] double objective(const Dataset& data, const LinearModel& model);

/// Gradient of `objective` with respect to (beta0, beta).
[[nodiscard]] Eigen::VectorXd objective_gradient(const Dataset& data, const LinearModel& model);

/// Factorized MM system matrix for one (q, lambda, weights):
///
///   P = [ sum w        1'WX                ]
///       [ X'W1         X'WX + (2 n lambda / M) I ]
///
/// It is factorized once and reused for every MM step at that lambda.
class SystemFactorization {
 public:
  SystemFactorization(Eigen::MatrixXd matrix, double base_jitter, double min_jitter, double max_jitter,
                      Eigen::Index jitter_from);

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  /// Jitter actually added to the diagonal (0 when the plain matrix factorized).
  [[nodiscard]] double jitter() const noexcept { return jitter_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double jitter_ = 0.0;
};

[[nodiscard]] SystemFactorization build_system_inverse(const Dataset& data, double q, double lambda,
                                                       double initial_jitter = 0.0);

/// One majorize-minimize update from `current`. Never increases the objective.
[[nodiscard]] LinearModel mm_step(const Dataset& data, const LinearModel& current,
                                  const SystemFactorization& system);

/// Linear generalized DWD at one lambda, started from `warm` or from zero.
/// Non-convergence is reported in the FitReport, not thrown.
[[nodiscard]] LinearFit fit_linear(const Dataset& data, double q, double lambda, const SolverConfig& config = {},
                                   const std::optional<LinearModel>& warm = std::nullopt);

/// Fits every lambda, visiting them in descending order with warm starts.
/// The output is in the order of `lambdas`.
[[nodiscard]] std::vector<LinearFit> fit_linear_path(const Dataset& data, double q,
                                                     const std::vector<double>& lambdas,
                                                     const SolverConfig& config = {});

}  // namespace dwd
