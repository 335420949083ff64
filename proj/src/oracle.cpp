#include "dwd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dwd/error.hpp"
#include "dwd/loss.hpp"

namespace dwd::oracle {

double reference_loss(double q, double u) {
  if (u <= q / (q + 1.0)) return 1.0 - u;
  return std::pow(q, q) / std::pow(q + 1.0, q + 1.0) / std::pow(u, q);
}

double reference_loss_derivative(double q, double u) {
  if (u <= q / (q + 1.0)) return -1.0;
  return -std::pow(q / (q + 1.0), q + 1.0) / std::pow(u, q + 1.0);
}

namespace {

using Vec = std::vector<double>;

double reference_kernel(const KernelSpec& k, const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                        Eigen::Index j) {
  double dot = 0.0;
  double dist = 0.0;
  for (Eigen::Index t = 0; t < a.cols(); ++t) {
    dot += a(i, t) * b(j, t);
    dist += (a(i, t) - b(j, t)) * (a(i, t) - b(j, t));
  }
  switch (k.kind) {
    case KernelKind::linear:
      return dot;
    case KernelKind::polynomial: {
      double out = 1.0;
      for (int d = 0; d < k.degree; ++d) out *= k.offset + dot;
      return out;
    }
    case KernelKind::gaussian:
      return std::exp(-k.sigma * dist);
  }
  return 0.0;
}

/// Smooth objective over theta = (beta0, coefficients...) with its gradient.
class Problem {
 public:
  Problem(const Dataset& data, double q, double lambda, const std::optional<KernelSpec>& kernel)
      : data_(data), q_(q), lambda_(lambda), kernel_(kernel.has_value()) {
    const auto n = static_cast<std::size_t>(data.n());
    if (kernel_) {
      gram_.assign(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          gram_[i * n + j] = reference_kernel(*kernel, data.x(), static_cast<Eigen::Index>(i), data.x(),
                                              static_cast<Eigen::Index>(j));
        }
      }
    }
  }

  [[nodiscard]] std::size_t size() const {
    return 1 + static_cast<std::size_t>(kernel_ ? data_.n() : data_.p());
  }

  /// Returns the objective and writes the gradient.
  double evaluate(const Vec& theta, Vec& grad) const {
    const auto n = static_cast<std::size_t>(data_.n());
    const auto p = static_cast<std::size_t>(data_.p());
    const std::size_t m = size() - 1;
    grad.assign(size(), 0.0);
    // penalty: lambda * theta' G theta with G = I (linear) or K (kernel)
    Vec g_theta(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      if (kernel_) {
        for (std::size_t b = 0; b < m; ++b) g_theta[a] += gram_[a * n + b] * theta[1 + b];
      } else {
        g_theta[a] = theta[1 + a];
      }
    }
    double penalty = 0.0;
    for (std::size_t a = 0; a < m; ++a) penalty += theta[1 + a] * g_theta[a];
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = theta[0];
      if (kernel_) {
        f += g_theta[i];  // K symmetric, so (K alpha)_i
      } else {
        for (std::size_t j = 0; j < p; ++j) f += data_.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * theta[1 + j];
      }
      const double yi = data_.y()[static_cast<Eigen::Index>(i)];
      const double wi = data_.weights()[static_cast<Eigen::Index>(i)];
      loss += wi * reference_loss(q_, yi * f);
      const double r = wi * yi * reference_loss_derivative(q_, yi * f) / static_cast<double>(n);
      grad[0] += r;
      if (kernel_) {
        for (std::size_t a = 0; a < m; ++a) grad[1 + a] += r * gram_[a * n + i];
      } else {
        for (std::size_t j = 0; j < p; ++j) grad[1 + j] += r * data_.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    for (std::size_t a = 0; a < m; ++a) grad[1 + a] += 2.0 * lambda_ * g_theta[a];
    return loss / static_cast<double>(n) + lambda_ * penalty;
  }

 private:
  const Dataset& data_;
  double q_;
  double lambda_;
  bool kernel_;
  Vec gram_;
};

double inf_norm(const Vec& v) {
  double out = 0.0;
  for (const double x : v) out = std::max(out, std::abs(x));
  return out;
}

}  // namespace

PenalizedOptimum gd_solve_penalized(const Dataset& data, double q, double lambda,
                                    const std::optional<KernelSpec>& kernel, double gradient_tol) {
  data.require_fittable();
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(q > 0.0)) throw InvalidArgument("q must be positive");
  if (kernel) kernel->validate();
  const Problem problem(data, q, lambda, kernel);
  const std::size_t dim = problem.size();

  Vec theta(dim, 0.0);
  Vec grad;
  double value = problem.evaluate(theta, grad);
  Vec trial(dim);
  Vec trial_grad;
  double step = 1.0;
  constexpr long kMaxIter = 1000000;
  long it = 0;
  for (; it < kMaxIter && inf_norm(grad) > gradient_tol; ++it) {
    double gg = 0.0;
    for (const double g : grad) gg += g * g;
    double t = step;
    double trial_value = 0.0;
    while (true) {
      for (std::size_t k = 0; k < dim; ++k) trial[k] = theta[k] - t * grad[k];
      trial_value = problem.evaluate(trial, trial_grad);
      // Armijo with a rounding allowance so tiny late steps are not rejected forever.
      if (trial_value <= value - 0.5 * t * gg + 1e-15 * std::abs(value)) break;
      t *= 0.5;
      if (t < 1e-30) break;
    }
    // Barzilai-Borwein guess for the next trial step.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double s = trial[k] - theta[k];
      const double y = trial_grad[k] - grad[k];
      ss += s * s;
      sy += s * y;
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : 2.0 * t;
    theta.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
  }
  if (inf_norm(grad) > gradient_tol) {
    throw NumericalError("gradient-descent oracle did not reach tolerance within " + std::to_string(kMaxIter) +
                         " iterations");
  }
  PenalizedOptimum out;
  out.beta0 = theta[0];
  out.coefficients.assign(theta.begin() + 1, theta.end());
  out.objective = value;
  out.gradient_norm = inf_norm(grad);
  out.iterations = it;
  return out;
}

std::vector<double> reference_decision_values(const PenalizedOptimum& optimum, const Dataset& train,
                                              const Eigen::MatrixXd& x, const std::optional<KernelSpec>& kernel) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()), optimum.beta0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double& f = out[static_cast<std::size_t>(r)];
    for (std::size_t k = 0; k < optimum.coefficients.size(); ++k) {
      const double basis = kernel ? reference_kernel(*kernel, x, r, train.x(), static_cast<Eigen::Index>(k))
                                  : x(r, static_cast<Eigen::Index>(k));
      f += optimum.coefficients[k] * basis;
    }
  }
  return out;
}

namespace {

struct ConstrainedParts {
  double inverse_margins = 0.0;
  double slack_penalty = 0.0;
};

ConstrainedParts constrained_parts(const Dataset& data, const std::vector<double>& projections, double q, double c,
                                   double omega0) {
  const double floor_margin = std::pow(q / c, 1.0 / (q + 1.0));
  ConstrainedParts parts;
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const double v = data.y()[static_cast<Eigen::Index>(i)] * (omega0 + projections[i]);
    const double slack = std::max(0.0, floor_margin - v);
    parts.inverse_margins += 1.0 / std::pow(v + slack, q);
    parts.slack_penalty += c * slack;
  }
  return parts;
}

std::vector<double> projections_of(const Dataset& data, const Eigen::VectorXd& omega) {
  if (omega.size() != data.p()) throw InvalidArgument("direction has the wrong dimension");
  std::vector<double> proj(static_cast<std::size_t>(data.n()), 0.0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) proj[static_cast<std::size_t>(i)] += data.x()(i, j) * omega[j];
  }
  return proj;
}

}  // namespace

double constrained_objective(const Dataset& data, double q, double c, double omega0, const Eigen::VectorXd& omega) {
  const auto parts = constrained_parts(data, projections_of(data, omega), q, c, omega0);
  return parts.inverse_margins + parts.slack_penalty;
}

double constrained_slack_penalty(const Dataset& data, double q, double c, double omega0, const Eigen::VectorXd& omega) {
  return constrained_parts(data, projections_of(data, omega), q, c, omega0).slack_penalty;
}

ConstrainedOptimum constrained_solve_2d(const Dataset& data, double q, double c, int angles) {
  if (data.p() != 2) throw InvalidArgument("the constrained oracle handles p = 2 only");
  if (!(c > 0.0) || !(q > 0.0)) throw InvalidArgument("q and c must be positive");
  if (angles < 8) throw InvalidArgument("too few angles");
  data.require_fittable();
  const double floor_margin = std::pow(q / c, 1.0 / (q + 1.0));
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;

  ConstrainedOptimum best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<double> proj(static_cast<std::size_t>(data.n()));
  for (int a = 0; a < angles; ++a) {
    const double theta = 2.0 * std::numbers::pi * a / angles;
    const Eigen::Vector2d omega(std::cos(theta), std::sin(theta));
    double reach = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      proj[static_cast<std::size_t>(i)] = data.x()(i, 0) * omega[0] + data.x()(i, 1) * omega[1];
      reach = std::max(reach, std::abs(proj[static_cast<std::size_t>(i)]));
    }
    // The objective is convex in omega0 and increasing outside this bracket.
    double lo = -(reach + floor_margin + 1.0);
    double hi = reach + floor_margin + 1.0;
    auto f = [&](double w0) {
      const auto parts = constrained_parts(data, proj, q, c, w0);
      return parts.inverse_margins + parts.slack_penalty;
    };
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 100 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - golden * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + golden * (hi - lo);
        f2 = f(x2);
      }
    }
    const double w0 = f1 <= f2 ? x1 : x2;
    const double value = std::min(f1, f2);
    if (value < best.objective) {
      best.objective = value;
      best.omega0 = w0;
      best.omega = omega;
    }
  }
  return best;
}

ErrorEstimate bayes_error_mc(const BayesOracle& oracle, Eigen::Index n_mc, std::uint64_t seed) {
  if (n_mc < 1000) throw InvalidArgument("Monte-Carlo Bayes error needs at least 1000 draws");
  const Dataset sample = oracle.sample(n_mc, seed);
  const Eigen::VectorXi labels = oracle.classify(sample.x());
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < n_mc; ++i) wrong += labels[i] != static_cast<int>(sample.y()[i]);
  const double rate = static_cast<double>(wrong) / static_cast<double>(n_mc);
  return {rate, std::sqrt(rate * (1.0 - rate) / static_cast<double>(n_mc))};
}

ErrorEstimate model_error_mc(const BayesOracle& oracle, const AnyModel& model, Eigen::Index n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw InvalidArgument("need at least one draw");
  const Dataset sample = oracle.sample(n_mc, seed);
  const double rate = misclassification_rate(model, sample);
  return {rate, std::sqrt(rate * (1.0 - rate) / static_cast<double>(n_mc))};
}

FisherCheck fisher_grid_check(double q, const std::vector<double>& eta_grid, double step, double range) {
  if (!(step > 0.0) || !(range > 0.0)) throw InvalidArgument("grid step and range must be positive");
  const LossSpec spec(q);
  const auto points = static_cast<long>(std::llround(2.0 * range / step));
  FisherCheck out;
  for (const double eta : eta_grid) {
    if (!(eta > 0.0 && eta < 1.0) || eta == 0.5) throw InvalidArgument("eta values must lie in (0,1) minus 1/2");
    double best_f = -range;
    double best_risk = std::numeric_limits<double>::infinity();
    for (long k = 0; k <= points; ++k) {
      const double f = -range + static_cast<double>(k) * step;
      const double risk = eta * reference_loss(q, f) + (1.0 - eta) * reference_loss(q, -f);
      if (risk < best_risk) {
        best_risk = risk;
        best_f = f;
      }
    }
    const double deviation = std::abs(best_f - population_minimizer(spec, eta).value);
    if (deviation > out.max_deviation) {
      out.max_deviation = deviation;
      out.worst_eta = eta;
    }
  }
  return out;
}

}  // namespace dwd::oracle
