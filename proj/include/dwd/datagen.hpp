#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "dwd/dataset.hpp"

namespace dwd {

/// Bumped whenever a generator changes the data it emits for a given seed.
inline constexpr int kGeneratorVersion = 1;

enum class Scenario { mixture_fig1, datapiling_fig2, example1, example2, example3, example4 };

/// Accepts fig1/mixture, fig2/datapiling, ex1..ex4 and example1..example4.
[[nodiscard]] Scenario parse_scenario(const std::string& name);
[[nodiscard]] std::string scenario_name(Scenario scenario);

/// Bayes rule of the two-dimensional Gaussian-mixture model: each class is an
/// equal mixture of N(mu_k, I/5) over its ten centers and the classes have equal
/// prior. A point goes to +1 when its positive-class density is at least the
/// negative-class density, so exact ties go to +1.
class BayesOracle {
 public:
  BayesOracle(Eigen::MatrixX2d positive_centers, Eigen::MatrixX2d negative_centers);

  [[nodiscard]] int classify(const Eigen::Vector2d& z) const;
  [[nodiscard]] Eigen::VectorXi classify(const Eigen::MatrixXd& points) const;

  /// Fresh draws: label by a fair coin, then a uniformly chosen center of that class.
  [[nodiscard]] Dataset sample(Eigen::Index n, std::uint64_t seed) const;

  [[nodiscard]] const Eigen::MatrixX2d& positive_centers() const noexcept { return positive_; }
  [[nodiscard]] const Eigen::MatrixX2d& negative_centers() const noexcept { return negative_; }

 private:
  [[nodiscard]] double log_density(const Eigen::MatrixX2d& centers, const Eigen::Vector2d& z) const;

  Eigen::MatrixX2d positive_;
  Eigen::MatrixX2d negative_;
};

struct MixtureSample {
  Dataset data;
  BayesOracle oracle;
};

/// Ten positive centers from N((1,0), I), ten negative from N((0,1), I); n/2
/// points per class, each around a uniformly picked center with covariance I/5.
/// Rows are ordered negative class first. n must be even.
[[nodiscard]] MixtureSample gen_mixture(Eigen::Index n, std::uint64_t seed);

/// 50 points from N(-mu, I) then 50 from N(mu, I), mu = (3, 0, ..., 0) in 200 dimensions.
[[nodiscard]] Dataset gen_datapiling(std::uint64_t seed);

struct ExampleOptions {
  /// Example 3: use one outlier coordinate for every contaminated point
  /// instead of drawing it per point.
  bool shared_outlier_coordinate = false;
};

/// The four benchmark designs, balanced, negative class first:
///  1: N((+-2.2, 0, ..., 0), I).
///  2: 80% as example 1, 20% with mean (+-100, +-500, 0, ..., 0).
///  3: 80% as example 1, 20% with the first mean coordinate +-0.1 and one
///     random other coordinate +-100.
///  4: 25 coordinates standard normal (-1) or 11.09 times standard normal (+1),
///     followed by their squares; requires p = 50.
/// Throws InvalidArgument for k outside 1..4, odd n or an unusable p.
[[nodiscard]] Dataset gen_example(int k, Eigen::Index n = 500, Eigen::Index p = 50, std::uint64_t seed = 0,
                                  const ExampleOptions& options = {});

}  // namespace dwd
