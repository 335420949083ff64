#include "dwd/linear_solver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dwd/error.hpp"
#include "dwd/loss.hpp"

namespace dwd {

namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be finite and positive, got " + std::to_string(lambda));
  }
}

void require_dims(const Dataset& data, const LinearModel& model) {
  if (model.beta.size() != data.p()) {
    throw InvalidArgument("model has " + std::to_string(model.beta.size()) + " coefficients but data has " +
                          std::to_string(data.p()) + " features");
  }
}

bool factorization_ok(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double largest = d.cwiseAbs().maxCoeff();
  return d.minCoeff() > largest * 1e-14;
}

}  // namespace

Eigen::VectorXd LinearModel::decision_values(const Eigen::MatrixXd& x) const {
  if (x.cols() != beta.size()) {
    throw InvalidArgument("expected " + std::to_string(beta.size()) + " features, got " + std::to_string(x.cols()));
  }
  return (x * beta).array() + beta0;
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(jitter >= 0.0)) throw InvalidArgument("jitter must be nonnegative");
}

double objective(const Dataset& data, const LinearModel& model) {
  require_dims(data, model);
  const LossSpec loss(model.q);
  const Eigen::VectorXd f = model.decision_values(data.x());
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) total += data.weights()[i] * loss_value(loss, data.y()[i] * f[i]);
  return total / static_cast<double>(data.n()) + model.lambda * model.beta.squaredNorm();
}

Eigen::VectorXd objective_gradient(const Dataset& data, const LinearModel& model) {
  require_dims(data, model);
  const LossSpec loss(model.q);
  const Eigen::VectorXd f = model.decision_values(data.x());
  Eigen::VectorXd z(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    z[i] = data.weights()[i] * data.y()[i] * loss_derivative(loss, data.y()[i] * f[i]) / static_cast<double>(data.n());
  }
  Eigen::VectorXd g(data.p() + 1);
  g[0] = z.sum();
  g.tail(data.p()) = data.x().transpose() * z + 2.0 * model.lambda * model.beta;
  return g;
}

SystemFactorization::SystemFactorization(Eigen::MatrixXd matrix, double base_jitter, double min_jitter,
                                         double max_jitter, Eigen::Index jitter_from)
    : matrix_(std::move(matrix)) {
  const Eigen::Index size = matrix_.rows();
  const Eigen::Index tail = size - jitter_from;
  auto attempt = [&](double shift) {
    Eigen::MatrixXd shifted = matrix_;
    shifted.diagonal().tail(tail).array() += shift;
    ldlt_.compute(shifted);
    return factorization_ok(ldlt_);
  };
  if (attempt(base_jitter)) {
    jitter_ = base_jitter;
    return;
  }
  for (double shift = min_jitter; shift <= max_jitter * (1.0 + 1e-12); shift *= 10.0) {
    if (attempt(base_jitter + shift)) {
      jitter_ = base_jitter + shift;
      spdlog::warn("MM system matrix needed diagonal jitter {:.3g} to factorize", jitter_);
      return;
    }
  }
  throw NumericalError("MM system matrix is singular even with diagonal jitter " + std::to_string(max_jitter));
}

Eigen::VectorXd SystemFactorization::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != matrix_.rows()) throw InvalidArgument("right-hand side has the wrong length");
  return ldlt_.solve(rhs);
}

SystemFactorization build_system_inverse(const Dataset& data, double q, double lambda, double initial_jitter) {
  require_lambda(lambda);
  const LossSpec loss(q);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const Eigen::VectorXd& w = data.weights();
  const Eigen::MatrixXd wx = w.asDiagonal() * data.x();

  Eigen::MatrixXd matrix(p + 1, p + 1);
  matrix(0, 0) = w.sum();
  matrix.block(0, 1, 1, p) = wx.colwise().sum();
  matrix.block(1, 0, p, 1) = matrix.block(0, 1, 1, p).transpose();
  matrix.block(1, 1, p, p) = data.x().transpose() * wx;
  matrix.block(1, 1, p, p).diagonal().array() += 2.0 * static_cast<double>(n) * lambda / loss.lipschitz();

  const double mean_diag = matrix.diagonal().mean();
  return SystemFactorization(std::move(matrix), initial_jitter, 1e-10 * mean_diag, 1e-6 * mean_diag, 0);
}

LinearModel mm_step(const Dataset& data, const LinearModel& current, const SystemFactorization& system) {
  const LossSpec loss(current.q);
  const Eigen::VectorXd direction = system.solve(objective_gradient(data, current));
  const double scale = static_cast<double>(data.n()) / loss.lipschitz();
  LinearModel next = current;
  next.beta0 -= scale * direction[0];
  next.beta -= scale * direction.tail(data.p());
  return next;
}

LinearFit fit_linear(const Dataset& data, double q, double lambda, const SolverConfig& config,
                     const std::optional<LinearModel>& warm) {
  config.validate();
  require_lambda(lambda);
  data.require_fittable();
  const LossSpec loss(q);

  LinearFit fit;
  fit.model.q = q;
  fit.model.lambda = lambda;
  if (warm) {
    if (warm->beta.size() != data.p()) throw InvalidArgument("warm start has the wrong dimension");
    fit.model.beta0 = warm->beta0;
    fit.model.beta = warm->beta;
  } else {
    fit.model.beta = Eigen::VectorXd::Zero(data.p());
  }

  const SystemFactorization system = build_system_inverse(data, q, lambda, config.jitter);
  FitReport& report = fit.report;
  report.jitter = system.jitter();
  report.gradient_scale =
      loss.lipschitz() / static_cast<double>(data.n()) * system.matrix().cwiseAbs().rowwise().sum().maxCoeff();
  report.objective_trace.push_back(objective(data, fit.model));

  for (int it = 0; it < config.max_iter; ++it) {
    LinearModel next = mm_step(data, fit.model, system);
    const double change = std::max(std::abs(next.beta0 - fit.model.beta0),
                                   data.p() > 0 ? (next.beta - fit.model.beta).cwiseAbs().maxCoeff() : 0.0);
    fit.model = std::move(next);
    report.objective_trace.push_back(objective(data, fit.model));
    report.iterations = it + 1;
    if (change < config.tol) {
      report.converged = true;
      break;
    }
  }
  report.final_objective = report.objective_trace.back();
  report.kkt_residual = objective_gradient(data, fit.model).cwiseAbs().maxCoeff();
  return fit;
}

std::vector<LinearFit> fit_linear_path(const Dataset& data, double q, const std::vector<double>& lambdas,
                                       const SolverConfig& config) {
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

  std::vector<LinearFit> fits(lambdas.size());
  std::optional<LinearModel> warm;
  for (const auto k : order) {
    fits[k] = fit_linear(data, q, lambdas[k], config, warm);
    warm = fits[k].model;
  }
  return fits;
}

}  // namespace dwd
