#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dwd/dataset.hpp"
#include "dwd/linear_solver.hpp"

namespace dwd {

enum class KernelKind { linear, polynomial, gaussian };

/// linear:     <x, x'>
/// polynomial: (offset + <x, x'>)^degree
/// gaussian:   exp(-sigma ||x - x'||^2)
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double offset = 0.0;
  int degree = 1;
  double sigma = 1.0;

  [[nodiscard]] static KernelSpec linear() { return {}; }
  [[nodiscard]] static KernelSpec polynomial(double offset, int degree);
  [[nodiscard]] static KernelSpec gaussian(double sigma);

  void validate() const;
  [[nodiscard]] std::string name() const;
};

[[nodiscard]] KernelKind parse_kernel_kind(const std::string& name);

[[nodiscard]] double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                                  const Eigen::Ref<const Eigen::VectorXd>& b);

/// Gram matrix of the rows of x. Rows are assembled in parallel blocks.
[[nodiscard]] Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x);

/// (i, j) entry K(a_i, b_j).
[[nodiscard]] Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// 1 / median of the positive squared distances between rows. Uses every pair
/// when there are at most 1e4, otherwise 1e4 pairs drawn with `seed`.
[[nodiscard]] double median_heuristic_sigma(const Eigen::MatrixXd& x, std::uint64_t seed = 0);

struct KernelModel {
  double beta0 = 0.0;
  Eigen::VectorXd alpha;
  KernelSpec kernel;
  double q = 1.0;
  double lambda = 1.0;
  Eigen::MatrixXd train_inputs;

  /// beta0 + sum_i alpha_i K(x, x_i) for every row x of `x`.
  [[nodiscard]] Eigen::VectorXd decision_values(const Eigen::MatrixXd& x) const;
};

struct KernelFit {
  KernelModel model;
  FitReport report;
};

/// (1/n) sum w_i V_q(y_i (beta0 + K_i'alpha)) + lambda alpha'K alpha.
[[nodiscard]] double kernel_objective(const Dataset& data, const Eigen::MatrixXd& gram, double beta0,
                                      const Eigen::VectorXd& alpha, double q, double lambda);

/// Gradient of `kernel_objective` in (beta0, alpha).
[[nodiscard]] Eigen::VectorXd kernel_objective_gradient(const Dataset& data, const Eigen::MatrixXd& gram,
                                                        double beta0, const Eigen::VectorXd& alpha, double q,
                                                        double lambda);

/// MM system for kernel DWD:
///
///   P = [ sum w      1'WK                        ]
///       [ KW1        KWK + (2 n lambda / M) K + jitter I ]
///
/// The base jitter is 1e-8 * trace(K)/n plus `extra_jitter`; it escalates by 10x
/// up to 1e-4 * trace(K)/n when K is numerically singular. Jitter only adds a
/// proximal term to the majorizer, so descent and fixed points are unchanged.
[[nodiscard]] SystemFactorization build_kernel_system(const Dataset& data, const Eigen::MatrixXd& gram, double q,
                                                      double lambda, double extra_jitter = 0.0);

/// One MM update of (beta0, alpha) for a precomputed Gram matrix.
void kernel_mm_step(const Dataset& data, const Eigen::MatrixXd& gram, const SystemFactorization& system, double q,
                    double lambda, double& beta0, Eigen::VectorXd& alpha);

[[nodiscard]] KernelFit fit_kernel(const Dataset& data, const KernelSpec& kernel, double q, double lambda,
                                   const SolverConfig& config = {},
                                   const std::optional<KernelModel>& warm = std::nullopt);

/// Same as fit_kernel with the Gram matrix supplied by the caller.
[[nodiscard]] KernelFit fit_kernel_gram(const Dataset& data, const KernelSpec& kernel, const Eigen::MatrixXd& gram,
                                        double q, double lambda, const SolverConfig& config = {},
                                        const std::optional<KernelModel>& warm = std::nullopt);

/// Descending-lambda warm-started path sharing one Gram matrix; output in input order.
[[nodiscard]] std::vector<KernelFit> fit_kernel_path(const Dataset& data, const KernelSpec& kernel, double q,
                                                     const std::vector<double>& lambdas,
                                                     const SolverConfig& config = {});

}  // namespace dwd
