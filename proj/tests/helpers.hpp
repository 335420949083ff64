#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dwd/dataset.hpp"
#include "dwd/rng.hpp"

namespace testing {

/// Two Gaussian classes shifted by +-separation along the first axis. Row 0 is
/// positive and row 1 negative so both classes always occur.
inline dwd::Dataset gaussian_classes(std::uint64_t seed, Eigen::Index n, Eigen::Index p, double separation = 1.0) {
  dwd::Rng rng(seed);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = i == 0 ? 1.0 : i == 1 ? -1.0 : (rng.uniform() < 0.5 ? 1.0 : -1.0);
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
    x(i, 0) += separation * y[i];
  }
  return {std::move(x), std::move(y)};
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing
