#include "dwd/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dwd/error.hpp"
#include "dwd/parallel.hpp"
#include "dwd/rng.hpp"

namespace dwd {

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidArgument("invalid log grid specification");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = hi;
    return grid;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = std::exp(std::log(hi) - step * k);
  grid.front() = hi;
  grid.back() = lo;
  return grid;
}

void CvPlan::validate(Eigen::Index n) const {
  if (folds < 2 || folds > n) {
    throw InvalidArgument("fold count must be in [2, n], got " + std::to_string(folds) + " for n = " +
                          std::to_string(n));
  }
  if (lambda_grid.empty()) throw InvalidArgument("lambda grid is empty");
  for (const double l : lambda_grid) {
    if (!(l > 0.0)) throw InvalidArgument("lambda grid values must be positive");
  }
  for (const double s : sigma_grid) {
    if (!(s > 0.0)) throw InvalidArgument("sigma grid values must be positive");
  }
}

std::vector<int> kfold_split(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw InvalidArgument("fold count must be in [2, n]");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> assignment(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < order.size(); ++k) {
    assignment[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return assignment;
}

std::vector<int> stratified_kfold_split(const Eigen::VectorXd& y, int folds, std::uint64_t seed) {
  const Eigen::Index n = y.size();
  if (folds < 2 || folds > n) throw InvalidArgument("fold count must be in [2, n]");
  Rng rng(seed);
  std::vector<int> assignment(static_cast<std::size_t>(n));
  std::size_t position = 0;
  for (const double label : {-1.0, 1.0}) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y[i] == label) members.push_back(i);
    }
    rng.shuffle(members);
    for (const auto i : members) {
      assignment[static_cast<std::size_t>(i)] = static_cast<int>(position++ % static_cast<std::size_t>(folds));
    }
  }
  return assignment;
}

namespace {

bool folds_usable(const Eigen::VectorXd& y, const std::vector<int>& assignment, int folds) {
  const Eigen::Index pos_total = (y.array() > 0).count();
  const Eigen::Index neg_total = y.size() - pos_total;
  for (int f = 0; f < folds; ++f) {
    Eigen::Index pos = 0;
    Eigen::Index neg = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (assignment[static_cast<std::size_t>(i)] != f) continue;
      (y[i] > 0 ? pos : neg) += 1;
    }
    if (pos == pos_total || neg == neg_total) return false;
  }
  return true;
}

double fold_error(const Eigen::VectorXd& decision, const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0.0;
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) wrong += ((decision[i] >= 0.0) ? 1.0 : -1.0) != y[i];
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

}  // namespace

CvResult cross_validate(const Dataset& data, double q, const std::optional<KernelSpec>& kernel, const CvPlan& plan,
                        const SolverConfig& config) {
  data.require_fittable();
  plan.validate(data.n());
  config.validate();
  if (kernel) kernel->validate();

  CvResult result;
  std::vector<int> assignment;
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 100 && !found; ++attempt) {
    assignment = plan.stratified ? stratified_kfold_split(data.y(), plan.folds, plan.seed + attempt)
                                 : kfold_split(data.n(), plan.folds, plan.seed + attempt);
    found = folds_usable(data.y(), assignment, plan.folds);
  }
  if (!found) throw DataError("cannot assign folds with both classes in every training fold");
  result.fold_assignment = assignment;

  std::vector<double> sigmas{0.0};
  const bool gaussian = kernel && kernel->kind == KernelKind::gaussian;
  if (gaussian) {
    if (!plan.sigma_grid.empty()) {
      sigmas = plan.sigma_grid;
    } else {
      const double center = median_heuristic_sigma(data.x(), plan.seed);
      sigmas.clear();
      for (int e = -3; e <= 3; ++e) sigmas.push_back(center * std::ldexp(1.0, e));
    }
  }

  const std::size_t n_sigma = sigmas.size();
  const std::size_t n_lambda = plan.lambda_grid.size();
  const auto n_folds = static_cast<std::size_t>(plan.folds);

  std::vector<Dataset> train(n_folds);
  std::vector<Dataset> held_out(n_folds);
  for (std::size_t f = 0; f < n_folds; ++f) {
    std::vector<Eigen::Index> in;
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      (assignment[static_cast<std::size_t>(i)] == static_cast<int>(f) ? out : in).push_back(i);
    }
    train[f] = data.subset(in);
    held_out[f] = data.subset(out);
  }

  // errors[(s * folds + f) * n_lambda + l]
  std::vector<double> errors(n_sigma * n_folds * n_lambda, 0.0);
  std::vector<char> failed(errors.size(), 0);
  parallel_for(n_sigma * n_folds, [&](std::size_t task) {
    const std::size_t s = task / n_folds;
    const std::size_t f = task % n_folds;
    double* err = &errors[task * n_lambda];
    char* bad = &failed[task * n_lambda];
    if (!kernel) {
      const auto fits = fit_linear_path(train[f], q, plan.lambda_grid, config);
      for (std::size_t l = 0; l < n_lambda; ++l) {
        err[l] = fold_error(fits[l].model.decision_values(held_out[f].x()), held_out[f].y());
        bad[l] = !fits[l].report.converged;
      }
    } else {
      KernelSpec spec = *kernel;
      if (gaussian) spec.sigma = sigmas[s];
      const auto fits = fit_kernel_path(train[f], spec, q, plan.lambda_grid, config);
      for (std::size_t l = 0; l < n_lambda; ++l) {
        err[l] = fold_error(fits[l].model.decision_values(held_out[f].x()), held_out[f].y());
        bad[l] = !fits[l].report.converged;
      }
    }
  });

  result.cells.reserve(n_sigma * n_lambda);
  for (std::size_t s = 0; s < n_sigma; ++s) {
    for (std::size_t l = 0; l < n_lambda; ++l) {
      CvCell cell;
      cell.sigma = gaussian ? sigmas[s] : 0.0;
      cell.lambda = plan.lambda_grid[l];
      for (std::size_t f = 0; f < n_folds; ++f) {
        const std::size_t idx = (s * n_folds + f) * n_lambda + l;
        cell.fold_errors.push_back(errors[idx]);
        cell.nonconverged += failed[idx];
      }
      const double k = static_cast<double>(n_folds);
      cell.mean_error = std::accumulate(cell.fold_errors.begin(), cell.fold_errors.end(), 0.0) / k;
      double ss = 0.0;
      for (const double e : cell.fold_errors) ss += (e - cell.mean_error) * (e - cell.mean_error);
      cell.std_error = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
      result.nonconverged += cell.nonconverged;
      result.cells.push_back(std::move(cell));
    }
  }

  for (std::size_t c = 1; c < result.cells.size(); ++c) {
    const CvCell& best = result.cells[result.chosen];
    const CvCell& cand = result.cells[c];
    const bool better = cand.mean_error < best.mean_error ||
                        (cand.mean_error == best.mean_error &&
                         (cand.lambda > best.lambda || (cand.lambda == best.lambda && cand.sigma > best.sigma)));
    if (better) result.chosen = c;
  }
  result.sigma = result.cells[result.chosen].sigma;
  result.lambda = result.cells[result.chosen].lambda;

  if (!kernel) {
    auto fit = fit_linear(data, q, result.lambda, config);
    result.model = std::move(fit.model);
    result.refit_report = std::move(fit.report);
  } else {
    KernelSpec spec = *kernel;
    if (gaussian) spec.sigma = result.sigma;
    auto fit = fit_kernel(data, spec, q, result.lambda, config);
    result.model = std::move(fit.model);
    result.refit_report = std::move(fit.report);
  }
  return result;
}

}  // namespace dwd
