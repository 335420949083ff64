#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dwd/dataset.hpp"

namespace dwd {

enum class HeaderMode {
  absent,
  present,
  /// Treat the first row as a header when one of its feature fields is not numeric.
  detect
};

struct CsvOptions {
  HeaderMode header = HeaderMode::detect;
  /// Zero-based label column; negative values count from the end (-1 is the last column).
  int label_column = 0;
  /// Standardize every feature column to mean 0 and variance 1 after loading.
  bool standardize = false;
};

/// Comma-separated numeric features plus one label column with exactly two
/// distinct values. Blank lines and lines starting with '#' are skipped.
/// Labels map to -1/+1 by ascending order: numerically when both labels are
/// numbers, otherwise lexicographically. The original names are kept in
/// Dataset::label_names().
[[nodiscard]] Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
[[nodiscard]] Dataset parse_csv(const std::string& text, const CsvOptions& options = {});

/// Features only (no label column). Zero data rows is allowed.
[[nodiscard]] Eigen::MatrixXd load_feature_csv(const std::filesystem::path& path,
                                               HeaderMode header = HeaderMode::detect);
[[nodiscard]] Eigen::MatrixXd parse_feature_csv(const std::string& text, HeaderMode header = HeaderMode::detect);

/// Sparse "label idx:value ..." rows with 1-based ascending indices.
/// `features` = 0 sizes the matrix by the largest index seen.
[[nodiscard]] Dataset load_libsvm(const std::filesystem::path& path, Eigen::Index features = 0);
[[nodiscard]] Dataset parse_libsvm(const std::string& text, Eigen::Index features = 0);

/// Writes "# <comment>" lines, a header row "label,x1,...,xp", then one row per
/// observation with the label first and doubles in round-trip precision.
void save_csv(const Dataset& data, const std::filesystem::path& path, const std::vector<std::string>& comments = {});
[[nodiscard]] std::string format_csv(const Dataset& data, const std::vector<std::string>& comments = {});

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Stratified random split: each class contributes round(ratio * size) rows to
/// the first part. Throws DataError when a class has fewer than two members.
[[nodiscard]] std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double ratio, std::uint64_t seed);

}  // namespace dwd
