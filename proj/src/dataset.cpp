#include "dwd/dataset.hpp"

#include <string>

#include "dwd/error.hpp"

namespace dwd {

namespace {

void validate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  if (y.size() != x.rows()) {
    throw InvalidArgument("label count " + std::to_string(y.size()) + " does not match " +
                          std::to_string(x.rows()) + " rows");
  }
  if (w.size() != x.rows()) {
    throw InvalidArgument("weight count " + std::to_string(w.size()) + " does not match " +
                          std::to_string(x.rows()) + " rows");
  }
  if (!x.allFinite()) throw DataError("feature matrix contains non-finite entries");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) {
      throw DataError("label at row " + std::to_string(i) + " is not +1 or -1");
    }
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
      throw DataError("weight at row " + std::to_string(i) + " is not finite and positive");
    }
  }
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y)
    : Dataset(std::move(x), std::move(y), Eigen::VectorXd()) {}

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, Eigen::VectorXd weights)
    : x_(std::move(x)), y_(std::move(y)), weights_(std::move(weights)) {
  if (weights_.size() == 0 && x_.rows() > 0) weights_ = Eigen::VectorXd::Ones(x_.rows());
  validate(x_, y_, weights_);
}

void Dataset::set_label_names(std::vector<std::string> names) {
  if (!names.empty() && names.size() != 2) throw InvalidArgument("label names must be a pair");
  label_names_ = std::move(names);
}

Eigen::Index Dataset::count(int label) const { return (y_.array() == static_cast<double>(label)).count(); }

Dataset Dataset::with_class_weights(double w_plus, double w_minus) const {
  Eigen::VectorXd w(n());
  for (Eigen::Index i = 0; i < n(); ++i) w[i] = y_[i] > 0 ? w_plus : w_minus;
  return with_weights(std::move(w));
}

Dataset Dataset::with_weights(Eigen::VectorXd weights) const {
  Dataset out(x_, y_, std::move(weights));
  out.label_names_ = label_names_;
  return out;
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), p());
  Eigen::VectorXd ys(xs.rows());
  Eigen::VectorXd ws(xs.rows());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = rows[k];
    if (i < 0 || i >= n()) throw InvalidArgument("subset row index out of range");
    const auto r = static_cast<Eigen::Index>(k);
    xs.row(r) = x_.row(i);
    ys[r] = y_[i];
    ws[r] = weights_[i];
  }
  Dataset out(std::move(xs), std::move(ys), std::move(ws));
  out.label_names_ = label_names_;
  return out;
}

void Dataset::require_fittable() const {
  if (n() < 2) throw DataError("need at least 2 observations to fit, got " + std::to_string(n()));
  if (p() < 1) throw DataError("need at least one feature");
  if (count(1) == 0 || count(-1) == 0) throw DataError("both classes must be present to fit");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale = Eigen::VectorXd::Ones(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean[j]).square().sum() / n;
    if (var > 0.0) {
      s.scale[j] = std::sqrt(var);
    } else {
      s.mean[j] = 0.0;  // constant column: leave untouched
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw InvalidArgument("standardizer dimension mismatch");
  return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Dataset Standardizer::apply(const Dataset& data) const {
  Dataset out(apply(data.x()), data.y(), data.weights());
  out.set_label_names(data.label_names());
  return out;
}

}  // namespace dwd
