#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "dwd/datagen.hpp"
#include "dwd/dataset.hpp"
#include "dwd/kernel.hpp"
#include "dwd/model.hpp"

/// Reference computations for checking the solvers. Nothing here calls the
/// loss, objective or linear-algebra routines it is meant to verify: the loss,
/// the objectives and the kernel sums are re-implemented with plain loops.
namespace dwd::oracle {

/// V_q evaluated straight from its power-law definition.
[[nodiscard]] double reference_loss(double q, double u);
[[nodiscard]] double reference_loss_derivative(double q, double u);

struct PenalizedOptimum {
  double beta0 = 0.0;
  /// beta for the linear problem, alpha for the kernel problem.
  std::vector<double> coefficients;
  double objective = 0.0;
  double gradient_norm = 0.0;
  long iterations = 0;
};

/// Minimizes the penalized objective (linear when `kernel` is empty, kernel
/// otherwise) by gradient descent with Barzilai-Borwein trial steps and
/// Armijo backtracking, until the gradient infinity norm is <= `gradient_tol`.
/// Throws NumericalError when the iteration cap (1e6) is reached.
[[nodiscard]] PenalizedOptimum gd_solve_penalized(const Dataset& data, double q, double lambda,
                                                  const std::optional<KernelSpec>& kernel = std::nullopt,
                                                  double gradient_tol = 1e-8);

/// Decision values of a PenalizedOptimum on new points, by direct summation.
[[nodiscard]] std::vector<double> reference_decision_values(const PenalizedOptimum& optimum, const Dataset& train,
                                                            const Eigen::MatrixXd& x,
                                                            const std::optional<KernelSpec>& kernel = std::nullopt);

/// sum_i 1/d_i^q + c sum_i eta_i for a unit-norm hyperplane, with every slack
/// at its closed-form optimum eta_i = max(0, (q/c)^(1/(q+1)) - v_i).
[[nodiscard]] double constrained_objective(const Dataset& data, double q, double c, double omega0,
                                           const Eigen::VectorXd& omega);
/// The slack part c * sum_i eta_i of the same evaluation.
[[nodiscard]] double constrained_slack_penalty(const Dataset& data, double q, double c, double omega0,
                                               const Eigen::VectorXd& omega);

struct ConstrainedOptimum {
  double omega0 = 0.0;
  Eigen::Vector2d omega;
  double objective = 0.0;
};

/// Two-dimensional constrained problem: omega = (cos t, sin t) over an angle
/// grid of `angles` points, golden-section search in omega0 for each angle.
[[nodiscard]] ConstrainedOptimum constrained_solve_2d(const Dataset& data, double q, double c, int angles = 100000);

struct ErrorEstimate {
  double rate = 0.0;
  double std_error = 0.0;
};

/// Error of the Bayes rule on n_mc fresh draws from its own mixture (n_mc >= 1000).
[[nodiscard]] ErrorEstimate bayes_error_mc(const BayesOracle& oracle, Eigen::Index n_mc, std::uint64_t seed);

/// Error of an arbitrary model on n_mc fresh draws from the mixture.
[[nodiscard]] ErrorEstimate model_error_mc(const BayesOracle& oracle, const AnyModel& model, Eigen::Index n_mc,
                                           std::uint64_t seed);

struct FisherCheck {
  double max_deviation = 0.0;
  double worst_eta = 0.0;
};

/// Grid-minimizes eta V(f) + (1-eta) V(-f) over f in [-range, range] and
/// compares with the closed-form population minimizer for each eta.
[[nodiscard]] FisherCheck fisher_grid_check(double q, const std::vector<double>& eta_grid, double step = 1e-4,
                                            double range = 10.0);

}  // namespace dwd::oracle
