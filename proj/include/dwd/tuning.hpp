#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dwd/dataset.hpp"
#include "dwd/kernel.hpp"
#include "dwd/linear_solver.hpp"
#include "dwd/model.hpp"

namespace dwd {

/// `count` points log-spaced from `lo` to `hi` inclusive, in descending order.
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, int count);

struct CvPlan {
  int folds = 5;
  /// 50 log-spaced values in [1e-4, 1e2] by default.
  std::vector<double> lambda_grid = log_grid(1e-4, 1e2, 50);
  /// Gaussian kernels only. Empty means median heuristic times 2^-3 ... 2^3.
  std::vector<double> sigma_grid;
  std::uint64_t seed = 0;
  /// Per-class balanced fold assignment.
  bool stratified = true;

  void validate(Eigen::Index n) const;
};

/// Random fold labels in [0, folds); fold sizes differ by at most one.
[[nodiscard]] std::vector<int> kfold_split(Eigen::Index n, int folds, std::uint64_t seed);

/// Like kfold_split, but each class is spread over the folds as evenly as possible.
[[nodiscard]] std::vector<int> stratified_kfold_split(const Eigen::VectorXd& y, int folds, std::uint64_t seed);

struct CvCell {
  /// Gaussian bandwidth of this cell; 0 for kernels without one.
  double sigma = 0.0;
  double lambda = 0.0;
  std::vector<double> fold_errors;
  double mean_error = 0.0;
  /// Standard deviation of the fold errors over sqrt(folds).
  double std_error = 0.0;
  int nonconverged = 0;
};

struct CvResult {
  /// Ordered sigma-major, then lambda, following the grid order.
  std::vector<CvCell> cells;
  std::size_t chosen = 0;
  double sigma = 0.0;
  double lambda = 0.0;
  AnyModel model;
  FitReport refit_report;
  std::vector<int> fold_assignment;
  int nonconverged = 0;
};

/// k-fold cross-validation of the 0-1 error over the lambda (and sigma) grid.
///
/// Each (sigma, fold) pair fits its lambda path with warm starts; the pairs run
/// in parallel and are reduced by grid position, so results do not depend on
/// scheduling. The chosen cell has the smallest mean error, ties going to the
/// larger lambda and then the larger sigma; the returned model is refit on the
/// full data at that cell. Without a kernel the linear solver is used.
///
/// Throws DataError if no fold assignment leaving both classes in every
/// training fold is found within 100 seeds.
[[nodiscard]] CvResult cross_validate(const Dataset& data, double q, const std::optional<KernelSpec>& kernel,
                                      const CvPlan& plan, const SolverConfig& config = {});

}  // namespace dwd
