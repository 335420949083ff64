#include "dwd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dwd/error.hpp"
#include "dwd/loss.hpp"
#include "dwd/parallel.hpp"
#include "dwd/rng.hpp"

namespace dwd {

KernelSpec KernelSpec::polynomial(double offset, int degree) {
  KernelSpec spec;
  spec.kind = KernelKind::polynomial;
  spec.offset = offset;
  spec.degree = degree;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::gaussian(double sigma) {
  KernelSpec spec;
  spec.kind = KernelKind::gaussian;
  spec.sigma = sigma;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  switch (kind) {
    case KernelKind::linear:
      break;
    case KernelKind::polynomial:
      if (degree < 1) throw InvalidArgument("polynomial degree must be at least 1");
      if (!std::isfinite(offset)) throw InvalidArgument("polynomial offset must be finite");
      break;
    case KernelKind::gaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("gaussian sigma must be positive");
      break;
  }
}

std::string KernelSpec::name() const {
  switch (kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::polynomial:
      return "polynomial";
    case KernelKind::gaussian:
      return "gaussian";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "poly" || name == "polynomial") return KernelKind::polynomial;
  if (name == "gauss" || name == "gaussian" || name == "rbf") return KernelKind::gaussian;
  throw InvalidArgument("unknown kernel '" + name + "'");
}

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw InvalidArgument("kernel arguments have different dimensions");
  switch (spec.kind) {
    case KernelKind::linear:
      return a.dot(b);
    case KernelKind::polynomial:
      return std::pow(spec.offset + a.dot(b), spec.degree);
    case KernelKind::gaussian:
      return std::exp(-spec.sigma * (a - b).squaredNorm());
  }
  return 0.0;
}

Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  spec.validate();
  if (a.cols() != b.cols()) {
    throw InvalidArgument("expected " + std::to_string(b.cols()) + " features, got " + std::to_string(a.cols()));
  }
  Eigen::MatrixXd out = a * b.transpose();
  switch (spec.kind) {
    case KernelKind::linear:
      break;
    case KernelKind::polynomial:
      out = (out.array() + spec.offset).pow(spec.degree).matrix();
      break;
    case KernelKind::gaussian: {
      const Eigen::VectorXd an = a.rowwise().squaredNorm();
      const Eigen::VectorXd bn = b.rowwise().squaredNorm();
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
          const double d2 = std::max(0.0, an[i] + bn[j] - 2.0 * out(i, j));
          out(i, j) = std::exp(-spec.sigma * d2);
        }
      }
      break;
    }
  }
  return out;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  spec.validate();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd gram(n, n);
  constexpr Eigen::Index kBlock = 64;
  const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
  parallel_for(blocks, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlock;
    const Eigen::Index end = std::min(n, begin + kBlock);
    for (Eigen::Index i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) gram(i, j) = kernel_value(spec, x.row(i).transpose(), x.row(j).transpose());
    }
  });
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return gram;
}

double median_heuristic_sigma(const Eigen::MatrixXd& x, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw InvalidArgument("median heuristic needs at least 2 points");
  constexpr std::size_t kMaxPairs = 10000;
  const auto pairs = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  std::vector<double> d2;
  if (pairs <= kMaxPairs) {
    d2.reserve(pairs);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) d2.push_back((x.row(i) - x.row(j)).squaredNorm());
    }
  } else {
    Rng rng(seed);
    d2.reserve(kMaxPairs);
    while (d2.size() < kMaxPairs) {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      if (i != j) d2.push_back((x.row(i) - x.row(j)).squaredNorm());
    }
  }
  std::erase_if(d2, [](double v) { return !(v > 0.0); });
  if (d2.empty()) throw InvalidArgument("median heuristic undefined: all points are identical");
  std::sort(d2.begin(), d2.end());
  const std::size_t m = d2.size();
  const double median = m % 2 == 1 ? d2[m / 2] : 0.5 * (d2[m / 2 - 1] + d2[m / 2]);
  return 1.0 / median;
}

Eigen::VectorXd KernelModel::decision_values(const Eigen::MatrixXd& x) const {
  if (x.cols() != train_inputs.cols()) {
    throw InvalidArgument("expected " + std::to_string(train_inputs.cols()) + " features, got " +
                          std::to_string(x.cols()));
  }
  return (cross_kernel(kernel, x, train_inputs) * alpha).array() + beta0;
}

namespace {

void require_gram(const Dataset& data, const Eigen::MatrixXd& gram, const Eigen::VectorXd& alpha) {
  if (gram.rows() != data.n() || gram.cols() != data.n()) throw InvalidArgument("Gram matrix must be n x n");
  if (alpha.size() != data.n()) throw InvalidArgument("alpha must have one entry per observation");
}

Eigen::VectorXd scaled_derivatives(const Dataset& data, const Eigen::VectorXd& fitted, double q) {
  const LossSpec loss(q);
  Eigen::VectorXd z(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    z[i] = data.weights()[i] * data.y()[i] * loss_derivative(loss, data.y()[i] * fitted[i]) / static_cast<double>(data.n());
  }
  return z;
}

}  // namespace

double kernel_objective(const Dataset& data, const Eigen::MatrixXd& gram, double beta0, const Eigen::VectorXd& alpha,
                        double q, double lambda) {
  require_gram(data, gram, alpha);
  const LossSpec loss(q);
  const Eigen::VectorXd k_alpha = gram * alpha;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    total += data.weights()[i] * loss_value(loss, data.y()[i] * (beta0 + k_alpha[i]));
  }
  return total / static_cast<double>(data.n()) + lambda * alpha.dot(k_alpha);
}

Eigen::VectorXd kernel_objective_gradient(const Dataset& data, const Eigen::MatrixXd& gram, double beta0,
                                          const Eigen::VectorXd& alpha, double q, double lambda) {
  require_gram(data, gram, alpha);
  const Eigen::VectorXd fitted = (gram * alpha).array() + beta0;
  const Eigen::VectorXd z = scaled_derivatives(data, fitted, q);
  Eigen::VectorXd g(data.n() + 1);
  g[0] = z.sum();
  g.tail(data.n()) = gram * (z + 2.0 * lambda * alpha);
  return g;
}

SystemFactorization build_kernel_system(const Dataset& data, const Eigen::MatrixXd& gram, double q, double lambda,
                                        double extra_jitter) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and positive");
  const LossSpec loss(q);
  const Eigen::Index n = data.n();
  const Eigen::VectorXd& w = data.weights();
  const Eigen::MatrixXd wk = w.asDiagonal() * gram;

  Eigen::MatrixXd matrix(n + 1, n + 1);
  matrix(0, 0) = w.sum();
  matrix.block(0, 1, 1, n) = wk.colwise().sum();
  matrix.block(1, 0, n, 1) = matrix.block(0, 1, 1, n).transpose();
  matrix.block(1, 1, n, n) = gram * wk + (2.0 * static_cast<double>(n) * lambda / loss.lipschitz()) * gram;

  double unit = gram.trace() / static_cast<double>(n);
  if (!(unit > 0.0)) unit = 1.0;
  return SystemFactorization(std::move(matrix), 1e-8 * unit + extra_jitter, 1e-7 * unit, 1e-4 * unit, 1);
}

void kernel_mm_step(const Dataset& data, const Eigen::MatrixXd& gram, const SystemFactorization& system, double q,
                    double lambda, double& beta0, Eigen::VectorXd& alpha) {
  const LossSpec loss(q);
  const Eigen::VectorXd direction = system.solve(kernel_objective_gradient(data, gram, beta0, alpha, q, lambda));
  const double scale = static_cast<double>(data.n()) / loss.lipschitz();
  beta0 -= scale * direction[0];
  alpha -= scale * direction.tail(data.n());
}

KernelFit fit_kernel_gram(const Dataset& data, const KernelSpec& kernel, const Eigen::MatrixXd& gram, double q,
                          double lambda, const SolverConfig& config, const std::optional<KernelModel>& warm) {
  config.validate();
  kernel.validate();
  data.require_fittable();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and positive");
  if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("q must be finite and positive");
  if (gram.rows() != data.n() || gram.cols() != data.n()) throw InvalidArgument("Gram matrix must be n x n");

  KernelFit fit;
  KernelModel& model = fit.model;
  model.kernel = kernel;
  model.q = q;
  model.lambda = lambda;
  model.train_inputs = data.x();
  if (warm) {
    if (warm->alpha.size() != data.n()) throw InvalidArgument("warm start has the wrong number of dual coefficients");
    model.beta0 = warm->beta0;
    model.alpha = warm->alpha;
  } else {
    model.alpha = Eigen::VectorXd::Zero(data.n());
  }

  const SystemFactorization system = build_kernel_system(data, gram, q, lambda, config.jitter);
  const LossSpec loss(q);
  FitReport& report = fit.report;
  report.jitter = system.jitter();
  report.gradient_scale =
      loss.lipschitz() / static_cast<double>(data.n()) * system.matrix().cwiseAbs().rowwise().sum().maxCoeff();
  report.objective_trace.push_back(kernel_objective(data, gram, model.beta0, model.alpha, q, lambda));

  for (int it = 0; it < config.max_iter; ++it) {
    const double old_beta0 = model.beta0;
    const Eigen::VectorXd old_alpha = model.alpha;
    kernel_mm_step(data, gram, system, q, lambda, model.beta0, model.alpha);
    const double change = std::max(std::abs(model.beta0 - old_beta0), (model.alpha - old_alpha).cwiseAbs().maxCoeff());
    report.objective_trace.push_back(kernel_objective(data, gram, model.beta0, model.alpha, q, lambda));
    report.iterations = it + 1;
    if (change < config.tol) {
      report.converged = true;
      break;
    }
  }
  report.final_objective = report.objective_trace.back();
  report.kkt_residual = kernel_objective_gradient(data, gram, model.beta0, model.alpha, q, lambda).cwiseAbs().maxCoeff();
  return fit;
}

KernelFit fit_kernel(const Dataset& data, const KernelSpec& kernel, double q, double lambda, const SolverConfig& config,
                     const std::optional<KernelModel>& warm) {
  return fit_kernel_gram(data, kernel, kernel_matrix(kernel, data.x()), q, lambda, config, warm);
}

std::vector<KernelFit> fit_kernel_path(const Dataset& data, const KernelSpec& kernel, double q,
                                       const std::vector<double>& lambdas, const SolverConfig& config) {
  const Eigen::MatrixXd gram = kernel_matrix(kernel, data.x());
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });
  std::vector<KernelFit> fits(lambdas.size());
  std::optional<KernelModel> warm;
  for (const auto k : order) {
    fits[k] = fit_kernel_gram(data, kernel, gram, q, lambdas[k], config, warm);
    warm = fits[k].model;
  }
  return fits;
}

}  // namespace dwd
