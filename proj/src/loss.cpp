#include "dwd/loss.hpp"

#include <cmath>
#include <string>

#include "dwd/error.hpp"

namespace dwd {

LossSpec::LossSpec(double q) : q_(q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw InvalidArgument("loss exponent q must be finite and positive, got " + std::to_string(q));
  }
  threshold_ = q / (q + 1.0);
  lipschitz_ = (q + 1.0) * (q + 1.0) / q;
}

// Power branch rewritten as (threshold/u)^q / (q+1); evaluated in log space so
// large q neither overflows q^q nor underflows (q+1)^-(q+1).
double loss_value(const LossSpec& spec, double u) noexcept {
  if (u <= spec.threshold()) return 1.0 - u;
  return std::exp(spec.q() * std::log(spec.threshold() / u)) / (spec.q() + 1.0);
}

double loss_derivative(const LossSpec& spec, double u) noexcept {
  if (u <= spec.threshold()) return -1.0;
  return -std::exp((spec.q() + 1.0) * std::log(spec.threshold() / u));
}

bool check_majorization(const LossSpec& spec, double t, double expansion, double curvature) noexcept {
  const double d = t - expansion;
  const double lhs = loss_value(spec, t);
  const double rhs = loss_value(spec, expansion) + loss_derivative(spec, expansion) * d + 0.5 * curvature * d * d;
  return lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs));
}

bool check_majorization(const LossSpec& spec, double t, double expansion) noexcept {
  return check_majorization(spec, t, expansion, spec.lipschitz());
}

double conditional_risk(const LossSpec& spec, double eta, double f) noexcept {
  return eta * loss_value(spec, f) + (1.0 - eta) * loss_value(spec, -f);
}

PopulationMinimizer population_minimizer(const LossSpec& spec, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw InvalidArgument("eta must lie in [0, 1], got " + std::to_string(eta));
  }
  const double saturation = 1e3 * spec.threshold();
  if (eta == 1.0) return {saturation, true};
  if (eta == 0.0) return {-saturation, true};
  if (eta == 0.5) return {0.0, false};
  const double exponent = 1.0 / (spec.q() + 1.0);
  if (eta > 0.5) return {spec.threshold() * std::pow(eta / (1.0 - eta), exponent), false};
  return {-spec.threshold() * std::pow((1.0 - eta) / eta, exponent), false};
}

}  // namespace dwd
