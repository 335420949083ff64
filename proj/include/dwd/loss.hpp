#pragma once

namespace dwd {

/// The generalized DWD loss V_q with its derived constants.
///
///   V_q(u) = 1 - u                                 for u <= q/(q+1)
///          = q^q / ((q+1)^(q+1) u^q)              for u >  q/(q+1)
///
/// V_q is convex, decreasing and differentiable with a Lipschitz derivative
/// whose constant is (q+1)^2/q. q = 1 is the standard DWD loss; as q grows the
/// loss approaches the hinge loss. Values of q above ~100 work but the power
/// branch then changes extremely fast past the threshold.
class LossSpec {
 public:
  /// Throws InvalidArgument unless q is finite and positive.
  explicit LossSpec(double q);

  [[nodiscard]] double q() const noexcept { return q_; }
  /// Branch point q/(q+1).
  [[nodiscard]] double threshold() const noexcept { return threshold_; }
  /// Lipschitz constant of V_q', (q+1)^2/q.
  [[nodiscard]] double lipschitz() const noexcept { return lipschitz_; }

 private:
  double q_;
  double threshold_;
  double lipschitz_;
};

[[nodiscard]] double loss_value(const LossSpec& spec, double u) noexcept;
[[nodiscard]] double loss_derivative(const LossSpec& spec, double u) noexcept;

/// Whether the quadratic upper bound with curvature `curvature` around `expansion`
/// holds at `t`:  V(t) <= V(e) + V'(e)(t - e) + curvature/2 (t - e)^2.
/// A relative slack of 1e-12 absorbs rounding when t is close to e.
[[nodiscard]] bool check_majorization(const LossSpec& spec, double t, double expansion,
                                      double curvature) noexcept;
/// Same check with the loss's own Lipschitz constant.
[[nodiscard]] bool check_majorization(const LossSpec& spec, double t, double expansion) noexcept;

/// eta V(f) + (1 - eta) V(-f), the expected loss at a point with P(Y=1|x) = eta.
[[nodiscard]] double conditional_risk(const LossSpec& spec, double eta, double f) noexcept;

struct PopulationMinimizer {
  double value = 0.0;
  /// True when eta is 0 or 1 and the minimizer (which diverges) was clamped.
  bool saturated = false;
};

/// Minimizer over f of conditional_risk, in closed form. For eta in {0, 1} the
/// true minimizer is infinite and the value is clamped to sign * 1e3 * q/(q+1).
/// Throws InvalidArgument when eta is outside [0, 1].
[[nodiscard]] PopulationMinimizer population_minimizer(const LossSpec& spec, double eta);

}  // namespace dwd
