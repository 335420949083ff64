#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace dwd {

/// Labelled training data: rows of `x` are observations, labels are +/-1.
///
/// Construction validates shapes, labels and finiteness; the stricter fitting
/// requirements (n >= 2, both classes present) are checked by `require_fittable`.
class Dataset {
 public:
  Dataset() = default;
  /// Unit weights.
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, Eigen::VectorXd weights);

  [[nodiscard]] const Eigen::MatrixXd& x() const noexcept { return x_; }
  [[nodiscard]] const Eigen::VectorXd& y() const noexcept { return y_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }
  [[nodiscard]] Eigen::Index n() const noexcept { return x_.rows(); }
  [[nodiscard]] Eigen::Index p() const noexcept { return x_.cols(); }

  /// Original label strings, index 0 for -1 and index 1 for +1, when loaded from a file.
  [[nodiscard]] const std::vector<std::string>& label_names() const noexcept { return label_names_; }
  void set_label_names(std::vector<std::string> names);

  [[nodiscard]] Eigen::Index count(int label) const;

  /// Returns a copy whose weights are w_plus for y=+1 and w_minus for y=-1.
  [[nodiscard]] Dataset with_class_weights(double w_plus, double w_minus) const;
  [[nodiscard]] Dataset with_weights(Eigen::VectorXd weights) const;

  /// Rows in the given order (indices may repeat).
  [[nodiscard]] Dataset subset(const std::vector<Eigen::Index>& rows) const;

  /// Throws DataError unless n >= 2, p >= 1 and both classes occur.
  void require_fittable() const;

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd weights_;
  std::vector<std::string> label_names_;
};

/// Per-column affine map x -> (x - mean) / scale. Constant columns get scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  /// Population mean and standard deviation of each column.
  [[nodiscard]] static Standardizer fit(const Eigen::MatrixXd& x);
  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  [[nodiscard]] Dataset apply(const Dataset& data) const;
};

}  // namespace dwd
