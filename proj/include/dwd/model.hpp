#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <variant>

#include "dwd/dataset.hpp"
#include "dwd/kernel.hpp"
#include "dwd/linear_solver.hpp"

namespace dwd {

using AnyModel = std::variant<LinearModel, KernelModel>;

[[nodiscard]] Eigen::VectorXd decision_values(const AnyModel& model, const Eigen::MatrixXd& x);

/// Labels from the sign of the decision values; a zero decision value maps to +1.
[[nodiscard]] Eigen::VectorXi predict(const LinearModel& model, const Eigen::MatrixXd& x);
[[nodiscard]] Eigen::VectorXi predict(const KernelModel& model, const Eigen::MatrixXd& x);
[[nodiscard]] Eigen::VectorXi predict(const AnyModel& model, const Eigen::MatrixXd& x);
[[nodiscard]] Eigen::VectorXi sign_labels(const Eigen::VectorXd& decision);

/// Fraction of rows whose predicted label differs from data.y().
[[nodiscard]] double misclassification_rate(const AnyModel& model, const Dataset& data);

/// The unit-normal hyperplane and slack cost equivalent to a penalized fit:
///   omega = beta/||beta||, omega0 = beta0/||beta||, c = (q+1)^(q+1)/q^q ||beta||^(q+1).
struct ConstrainedSolution {
  double omega0 = 0.0;
  Eigen::VectorXd omega;
  double c = 0.0;
};

/// Throws InvalidArgument when beta is exactly zero (no direction to normalize).
[[nodiscard]] ConstrainedSolution to_constrained(const LinearModel& model);

/// A model together with the input standardization it was trained under, if any.
struct ModelFile {
  static constexpr int kSchemaVersion = 1;

  AnyModel model;
  std::optional<Standardizer> standardizer;
};

/// Writes a JSON document with fields schema_version, model_kind, q, lambda,
/// kernel (kernel models), beta0, coefficients, train_inputs (kernel models)
/// and standardization (optional). Doubles are written in shortest round-trip form.
void save_model(const ModelFile& file, const std::filesystem::path& path);
void save_model(const AnyModel& model, const std::filesystem::path& path);

/// Throws ParseError on malformed content and VersionError on a schema mismatch.
[[nodiscard]] ModelFile load_model(const std::filesystem::path& path);
[[nodiscard]] ModelFile parse_model(const std::string& text);
[[nodiscard]] std::string serialize_model(const ModelFile& file);

}  // namespace dwd
