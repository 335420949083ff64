#include "dwd/datagen.hpp"

#include <cmath>
#include <string>

#include "dwd/error.hpp"
#include "dwd/rng.hpp"

namespace dwd {

namespace {

constexpr double kMixtureVariance = 0.2;
constexpr int kCenters = 10;

void require_even(Eigen::Index n) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("balanced designs need an even n >= 2, got " + std::to_string(n));
}

Eigen::VectorXd balanced_labels(Eigen::Index n) {
  Eigen::VectorXd y(n);
  y.head(n / 2).setConstant(-1.0);
  y.tail(n - n / 2).setConstant(1.0);
  return y;
}

}  // namespace

Scenario parse_scenario(const std::string& name) {
  if (name == "fig1" || name == "mixture") return Scenario::mixture_fig1;
  if (name == "fig2" || name == "datapiling") return Scenario::datapiling_fig2;
  if (name == "ex1" || name == "example1") return Scenario::example1;
  if (name == "ex2" || name == "example2") return Scenario::example2;
  if (name == "ex3" || name == "example3") return Scenario::example3;
  if (name == "ex4" || name == "example4") return Scenario::example4;
  throw InvalidArgument("unknown scenario '" + name + "'");
}

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::mixture_fig1:
      return "fig1";
    case Scenario::datapiling_fig2:
      return "fig2";
    case Scenario::example1:
      return "ex1";
    case Scenario::example2:
      return "ex2";
    case Scenario::example3:
      return "ex3";
    case Scenario::example4:
      return "ex4";
  }
  return "unknown";
}

BayesOracle::BayesOracle(Eigen::MatrixX2d positive_centers, Eigen::MatrixX2d negative_centers)
    : positive_(std::move(positive_centers)), negative_(std::move(negative_centers)) {
  if (positive_.rows() == 0 || negative_.rows() == 0) throw InvalidArgument("each class needs at least one center");
}

double BayesOracle::log_density(const Eigen::MatrixX2d& centers, const Eigen::Vector2d& z) const {
  // log sum_k exp(-||z - mu_k||^2 / (2 * 0.2)), stabilized by the largest term
  Eigen::VectorXd exponents(centers.rows());
  for (Eigen::Index k = 0; k < centers.rows(); ++k) {
    exponents[k] = -(z - centers.row(k).transpose()).squaredNorm() / (2.0 * kMixtureVariance);
  }
  const double top = exponents.maxCoeff();
  return top + std::log((exponents.array() - top).exp().sum());
}

int BayesOracle::classify(const Eigen::Vector2d& z) const {
  return log_density(positive_, z) >= log_density(negative_, z) ? 1 : -1;
}

Eigen::VectorXi BayesOracle::classify(const Eigen::MatrixXd& points) const {
  if (points.cols() != 2) throw InvalidArgument("the mixture model is two-dimensional");
  Eigen::VectorXi labels(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) labels[i] = classify(Eigen::Vector2d(points(i, 0), points(i, 1)));
  return labels;
}

Dataset BayesOracle::sample(Eigen::Index n, std::uint64_t seed) const {
  Rng rng(seed);
  const double sd = std::sqrt(kMixtureVariance);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool positive = rng.uniform() < 0.5;
    const auto& centers = positive ? positive_ : negative_;
    const auto k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(centers.rows())));
    x(i, 0) = rng.normal(centers(k, 0), sd);
    x(i, 1) = rng.normal(centers(k, 1), sd);
    y[i] = positive ? 1.0 : -1.0;
  }
  return Dataset(std::move(x), std::move(y));
}

MixtureSample gen_mixture(Eigen::Index n, std::uint64_t seed) {
  require_even(n);
  Rng rng(seed);
  Eigen::MatrixX2d positive(kCenters, 2);
  Eigen::MatrixX2d negative(kCenters, 2);
  for (int k = 0; k < kCenters; ++k) {
    positive(k, 0) = rng.normal(1.0, 1.0);
    positive(k, 1) = rng.normal(0.0, 1.0);
  }
  for (int k = 0; k < kCenters; ++k) {
    negative(k, 0) = rng.normal(0.0, 1.0);
    negative(k, 1) = rng.normal(1.0, 1.0);
  }
  const double sd = std::sqrt(kMixtureVariance);
  Eigen::VectorXd y = balanced_labels(n);
  Eigen::MatrixXd x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& centers = y[i] > 0 ? positive : negative;
    const auto k = static_cast<Eigen::Index>(rng.below(kCenters));
    x(i, 0) = rng.normal(centers(k, 0), sd);
    x(i, 1) = rng.normal(centers(k, 1), sd);
  }
  return {Dataset(std::move(x), std::move(y)), BayesOracle(std::move(positive), std::move(negative))};
}

Dataset gen_datapiling(std::uint64_t seed) {
  constexpr Eigen::Index kN = 100;
  constexpr Eigen::Index kP = 200;
  Rng rng(seed);
  Eigen::VectorXd y = balanced_labels(kN);
  Eigen::MatrixXd x(kN, kP);
  for (Eigen::Index i = 0; i < kN; ++i) {
    for (Eigen::Index j = 0; j < kP; ++j) x(i, j) = rng.normal();
    x(i, 0) += 3.0 * y[i];
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset gen_example(int k, Eigen::Index n, Eigen::Index p, std::uint64_t seed, const ExampleOptions& options) {
  if (k < 1 || k > 4) throw InvalidArgument("example index must be 1..4, got " + std::to_string(k));
  require_even(n);
  if (k == 4 && p != 50) throw InvalidArgument("example 4 has exactly 50 coordinates (25 plus their squares)");
  if (k == 2 && p < 2) throw InvalidArgument("example 2 needs p >= 2");
  if (k == 3 && p < 2) throw InvalidArgument("example 3 needs p >= 2");
  if (p < 1) throw InvalidArgument("p must be positive");

  Rng rng(seed);
  Eigen::VectorXd y = balanced_labels(n);
  Eigen::MatrixXd x(n, p);
  const Eigen::Index per_class = n / 2;
  // Within each class the first 80% (rounded) come from the example-1 component.
  const auto clean = static_cast<Eigen::Index>(std::llround(0.8 * static_cast<double>(per_class)));
  const Eigen::Index shared_coordinate = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p - 1 > 0 ? p - 1 : 1)));

  for (Eigen::Index i = 0; i < n; ++i) {
    const double label = y[i];
    const bool contaminated = (k == 2 || k == 3) && (i % per_class) >= clean;
    if (k == 4) {
      const double scale = label > 0 ? 11.09 : 1.0;
      for (Eigen::Index j = 0; j < 25; ++j) {
        x(i, j) = scale * rng.normal();
        x(i, j + 25) = x(i, j) * x(i, j);
      }
      continue;
    }
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
    if (!contaminated) {
      x(i, 0) += 2.2 * label;
    } else if (k == 2) {
      x(i, 0) += 100.0 * label;
      x(i, 1) += 500.0 * label;
    } else {
      x(i, 0) += 0.1 * label;
      const Eigen::Index j = options.shared_outlier_coordinate
                                 ? shared_coordinate
                                 : 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p - 1)));
      x(i, j) += 100.0 * label;
    }
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace dwd
