#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

/// Self-checks of the solvers against the reference computations in
/// dwd::oracle, grouped into named families. Each check reports the measured
/// quantity next to its threshold.
namespace dwd::verify {

struct CheckResult {
  std::string family;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20150821;
  /// Replace the loss's Lipschitz constant in the majorization and Lipschitz
  /// checks; a value below (q+1)^2/q must make them fail.
  std::optional<double> lipschitz_override;
  /// Smaller instance counts and Monte-Carlo sizes for a fast smoke run.
  bool quick = false;
};

/// loss, fisher, descent, oracle, constrained, linear-kernel, weights, bench, protocol, bayes.
[[nodiscard]] const std::vector<std::string>& families();

/// Throws InvalidArgument for an unknown family.
[[nodiscard]] std::vector<CheckResult> run_family(const std::string& family, const VerifyOptions& options = {});

/// One JSON object per line: family, check, passed, measured, threshold, detail.
[[nodiscard]] std::string to_json_line(const CheckResult& result);

}  // namespace dwd::verify
