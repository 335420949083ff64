#include "dwd/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "dwd/datagen.hpp"
#include "dwd/error.hpp"
#include "dwd/io.hpp"
#include "dwd/kernel.hpp"
#include "dwd/linear_solver.hpp"
#include "dwd/loss.hpp"
#include "dwd/model.hpp"
#include "dwd/oracle.hpp"
#include "dwd/rng.hpp"
#include "dwd/tuning.hpp"

namespace dwd::verify {

namespace {

constexpr double kQValues[] = {0.5, 1.0, 4.0, 8.0};

CheckResult make(std::string family, std::string name, bool passed, double measured, double threshold,
                 std::string detail = {}) {
  return {std::move(family), std::move(name), passed, measured, threshold, std::move(detail)};
}

/// Gaussian classes shifted by +-separation along a random unit direction.
/// The first two rows are one of each class; the rest are labelled at random
/// with P(+1) = positive_share.
Dataset random_instance(Rng& rng, Eigen::Index n, Eigen::Index p, double separation, double positive_share = 0.5) {
  Eigen::VectorXd direction(p);
  for (Eigen::Index j = 0; j < p; ++j) direction[j] = rng.normal();
  direction.normalize();
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = i == 0 ? 1.0 : i == 1 ? -1.0 : (rng.uniform() < positive_share ? 1.0 : -1.0);
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal() + separation * y[i] * direction[j];
  }
  return Dataset(std::move(x), std::move(y));
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

double max_trace_increase(const FitReport& report) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < report.objective_trace.size(); ++k) {
    worst = std::max(worst, report.objective_trace[k] - report.objective_trace[k - 1]);
  }
  return report.objective_trace.size() < 2 ? 0.0 : worst;
}

// ---------------------------------------------------------------------------

std::vector<CheckResult> loss_family(const VerifyOptions& opt) {
  const std::string fam = "loss";
  Rng rng(opt.seed);
  std::vector<CheckResult> out;
  const int samples = opt.quick ? 20000 : 100000;

  // finite differences
  {
    double worst_rel = 0.0;
    double worst_abs_near = 0.0;
    bool ok = true;
    for (int k = 0; k < samples / 10; ++k) {
      const LossSpec spec(log_uniform(rng, 0.1, 20.0));
      const bool near = k % 4 == 0;
      const double u = near ? spec.threshold() + (2.0 * rng.uniform() - 1.0) * 1e-5 : -3.0 + 8.0 * rng.uniform();
      const double h = 1e-6;
      const double fd = (loss_value(spec, u + h) - loss_value(spec, u - h)) / (2.0 * h);
      const double exact = loss_derivative(spec, u);
      const double err = std::abs(fd - exact);
      if (near) {
        worst_abs_near = std::max(worst_abs_near, err);
        ok = ok && err <= 1e-3;
      } else if (std::abs(u - spec.threshold()) > 1e-5) {
        const double rel = err / std::abs(exact);
        worst_rel = std::max(worst_rel, rel);
        ok = ok && rel <= 1e-5;
      }
    }
    out.push_back(make(fam, "derivative_finite_difference", ok, worst_rel, 1e-5,
                       "worst absolute error within 1e-5 of the branch point: " + format_double(worst_abs_near)));
  }

  // Lipschitz bound and majorization
  {
    double worst_ratio = 0.0;
    int lipschitz_violations = 0;
    int majorization_violations = 0;
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
      const LossSpec spec(log_uniform(rng, 0.1, 20.0));
      const double m = opt.lipschitz_override.value_or(spec.lipschitz());
      const double t = -3.0 + 9.0 * rng.uniform();
      // Half of the expansion points sit just past the branch, where curvature peaks.
      const double e = k % 2 == 0 ? -3.0 + 9.0 * rng.uniform() : spec.threshold() + 0.5 * rng.uniform();
      if (t != e) {
        const double ratio = std::abs(loss_derivative(spec, t) - loss_derivative(spec, e)) / std::abs(t - e) / m;
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 1.0 + 1e-9) ++lipschitz_violations;
      }
      if (!check_majorization(spec, t, e, m)) ++majorization_violations;
      const double d = t - e;
      const double gap = loss_value(spec, t) - (loss_value(spec, e) + loss_derivative(spec, e) * d + 0.5 * m * d * d);
      worst_gap = std::max(worst_gap, gap);
    }
    out.push_back(make(fam, "lipschitz_gradient", lipschitz_violations == 0, worst_ratio, 1.0,
                       std::to_string(lipschitz_violations) + " violations of |V'(t)-V'(s)| <= M|t-s| in " +
                           std::to_string(samples) + " pairs (measured = max ratio to M)"));
    out.push_back(make(fam, "quadratic_majorization", majorization_violations == 0, worst_gap, 0.0,
                       std::to_string(majorization_violations) + " violations in " + std::to_string(samples) +
                           " random (q, t, expansion) triples (measured = max lhs - rhs)"));
  }

  // convexity
  {
    int violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples / 10; ++k) {
      const LossSpec spec(log_uniform(rng, 0.1, 20.0));
      const double a = -3.0 + 9.0 * rng.uniform();
      const double b = -3.0 + 9.0 * rng.uniform();
      const double w = rng.uniform();
      const double gap = loss_value(spec, w * a + (1.0 - w) * b) - (w * loss_value(spec, a) + (1.0 - w) * loss_value(spec, b));
      worst = std::max(worst, gap);
      if (gap > 1e-12) ++violations;
    }
    out.push_back(make(fam, "convexity", violations == 0, worst, 1e-12,
                       std::to_string(violations) + " sampled violations of the chord inequality"));
  }

  // hinge limit
  {
    const LossSpec spec(1e3);
    double worst = 0.0;
    for (const double u : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
      worst = std::max(worst, std::abs(loss_value(spec, u) - std::max(1.0 - u, 0.0)));
    }
    out.push_back(make(fam, "hinge_limit_q1000", worst <= 1e-2, worst, 1e-2, "max |V_q(u) - max(1-u,0)| on {-1,0,0.5,1,2}"));
  }

  // monotone decrease in q for u > 0
  {
    const std::vector<double> qs = {0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 50.0, 100.0};
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 400; ++k) {
      const double u = 0.01 * k;
      for (std::size_t a = 1; a < qs.size(); ++a) {
        worst = std::max(worst, loss_value(LossSpec(qs[a]), u) - loss_value(LossSpec(qs[a - 1]), u));
      }
    }
    out.push_back(make(fam, "monotone_in_q", worst <= 1e-15, worst, 1e-15, "max V_{q'}(u) - V_q(u) for q' > q, u in (0, 4]"));
  }
  return out;
}

std::vector<CheckResult> fisher_family(const VerifyOptions&) {
  std::vector<double> etas;
  for (int k = 1; k < 20; ++k) {
    if (k != 10) etas.push_back(k / 20.0);
  }
  std::vector<CheckResult> out;
  for (const double q : kQValues) {
    const auto check = oracle::fisher_grid_check(q, etas, 1e-4);
    bool signs = true;
    for (const double eta : etas) {
      signs = signs && (population_minimizer(LossSpec(q), eta).value > 0.0) == (eta > 0.5);
    }
    out.push_back(make("fisher", "population_minimizer_q" + format_double(q), check.max_deviation <= 1e-3 && signs,
                       check.max_deviation, 1e-3,
                       "worst eta " + format_double(check.worst_eta) + (signs ? "" : "; sign mismatch")));
  }
  return out;
}

std::vector<CheckResult> descent_family(const VerifyOptions& opt) {
  Rng rng(opt.seed + 1);
  const int linear_fits = opt.quick ? 24 : 64;
  const int kernel_fits = opt.quick ? 12 : 40;
  SolverConfig config;
  config.tol = 1e-7;
  config.max_iter = 3000;
  double worst = -std::numeric_limits<double>::infinity();
  int bad = 0;
  for (int k = 0; k < linear_fits + kernel_fits; ++k) {
    const double q = kQValues[k % 4];
    const double lambda = log_uniform(rng, 1e-3, 1.0);
    const bool kernel = k >= linear_fits;
    const Eigen::Index n = kernel ? 15 + static_cast<Eigen::Index>(rng.below(26)) : 20 + static_cast<Eigen::Index>(rng.below(41));
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Dataset data = random_instance(rng, n, p, 0.5 + rng.uniform(), 0.3 + 0.4 * rng.uniform());
    FitReport report;
    if (kernel) {
      const KernelSpec spec = k % 3 == 0 ? KernelSpec::polynomial(1.0, 2) : KernelSpec::gaussian(log_uniform(rng, 0.05, 2.0));
      report = fit_kernel(data, spec, q, lambda, config).report;
    } else {
      report = fit_linear(data, q, lambda, config).report;
    }
    const double inc = max_trace_increase(report);
    worst = std::max(worst, inc);
    if (inc > 1e-12) ++bad;
  }
  return {make("descent", "objective_trace_nonincreasing", bad == 0, worst, 1e-12,
               std::to_string(linear_fits) + " linear and " + std::to_string(kernel_fits) + " kernel fits; " +
                   std::to_string(bad) + " traces rose by more than the threshold")};
}

std::vector<CheckResult> oracle_family(const VerifyOptions& opt) {
  Rng rng(opt.seed + 2);
  const int instances = opt.quick ? 6 : 20;
  SolverConfig config;
  config.tol = 1e-10;
  config.max_iter = 200000;
  std::vector<CheckResult> out;
  for (const bool kernel : {false, true}) {
    double worst_obj = 0.0;
    double worst_dec = 0.0;
    double worst_fresh = 0.0;
    for (int k = 0; k < instances; ++k) {
      const double q = kQValues[k % 4];
      const double lambda = log_uniform(rng, 0.01, 0.5);
      const Eigen::Index n = kernel ? 12 + static_cast<Eigen::Index>(rng.below(19)) : 10 + static_cast<Eigen::Index>(rng.below(41));
      const Eigen::Index p = kernel ? 2 : 1 + static_cast<Eigen::Index>(rng.below(5));
      const Dataset data = random_instance(rng, n, p, 0.5 + rng.uniform(), 0.3 + 0.4 * rng.uniform());
      const Dataset fresh = random_instance(rng, 20, p, 1.0);
      std::optional<KernelSpec> spec;
      if (kernel) spec = KernelSpec::gaussian(log_uniform(rng, 0.2, 2.0));
      const auto reference = oracle::gd_solve_penalized(data, q, lambda, spec);
      Eigen::MatrixXd points(data.n() + fresh.n(), p);
      points << data.x(), fresh.x();
      const auto ref_dec = oracle::reference_decision_values(reference, data, points, spec);
      double fitted_obj = 0.0;
      Eigen::VectorXd dec;
      if (kernel) {
        const auto fit = fit_kernel(data, *spec, q, lambda, config);
        fitted_obj = fit.report.final_objective;
        dec = fit.model.decision_values(points);
      } else {
        const auto fit = fit_linear(data, q, lambda, config);
        fitted_obj = objective(data, fit.model);
        dec = fit.model.decision_values(points);
      }
      worst_obj = std::max(worst_obj, std::abs(fitted_obj - reference.objective));
      for (Eigen::Index i = 0; i < dec.size(); ++i) {
        const double gap = std::abs(dec[i] - ref_dec[static_cast<std::size_t>(i)]);
        (i < data.n() ? worst_dec : worst_fresh) = std::max(i < data.n() ? worst_dec : worst_fresh, gap);
      }
    }
    const std::string mode = kernel ? "gaussian_kernel" : "linear";
    out.push_back(make("oracle", mode + "_objective_matches_gradient_descent", worst_obj <= 1e-6, worst_obj, 1e-6,
                       std::to_string(instances) + " instances"));
    out.push_back(make("oracle", mode + "_decision_values_match_gradient_descent", worst_dec <= 1e-4, worst_dec, 1e-4,
                       "training points; max gap at fresh points " + format_double(worst_fresh)));
  }
  return out;
}

std::vector<CheckResult> constrained_family(const VerifyOptions& opt) {
  Rng rng(opt.seed + 3);
  const int instances = opt.quick ? 3 : 10;
  const int angles = opt.quick ? 20000 : 100000;
  SolverConfig config;
  config.tol = 1e-10;
  config.max_iter = 200000;
  double worst_rel = 0.0;
  int sign_mismatches = 0;
  int oracle_sign_mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    const double q = kQValues[k % 4];
    const double lambda = log_uniform(rng, 0.02, 0.3);
    const Dataset data = random_instance(rng, 16 + static_cast<Eigen::Index>(rng.below(9)), 2, 0.8 + rng.uniform());
    const auto fit = fit_linear(data, q, lambda, config);
    const auto constrained = to_constrained(fit.model);
    const double ours = oracle::constrained_objective(data, q, constrained.c, constrained.omega0, constrained.omega);
    const auto best = oracle::constrained_solve_2d(data, q, constrained.c, angles);
    worst_rel = std::max(worst_rel, std::abs(ours - best.objective) / std::abs(best.objective));
    const Eigen::VectorXi fitted = predict(fit.model, data.x());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double unit = constrained.omega0 + data.x().row(i).dot(constrained.omega);
      const double grid = best.omega0 + data.x().row(i).dot(best.omega);
      sign_mismatches += (unit >= 0.0 ? 1 : -1) != fitted[i];
      oracle_sign_mismatches += (grid >= 0.0 ? 1 : -1) != fitted[i];
    }
  }
  return {make("constrained", "constrained_objective_matches_oracle", worst_rel <= 1e-3, worst_rel, 1e-3,
               std::to_string(instances) + " instances, " + std::to_string(angles) + " angles"),
          make("constrained", "classifier_signs_match", sign_mismatches == 0 && oracle_sign_mismatches == 0,
               sign_mismatches + oracle_sign_mismatches, 0,
               "mapped hyperplane mismatches: " + std::to_string(sign_mismatches) +
                   ", grid-optimum mismatches: " + std::to_string(oracle_sign_mismatches))};
}

std::vector<CheckResult> linear_kernel_family(const VerifyOptions& opt) {
  Rng rng(opt.seed + 4);
  const int instances = opt.quick ? 4 : 10;
  SolverConfig config;
  config.tol = 1e-10;
  config.max_iter = 500000;
  double worst = 0.0;
  int sign_mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    const double q = kQValues[k % 4];
    const double lambda = log_uniform(rng, 0.01, 0.5);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(5));
    const Eigen::Index n = p + 10 + static_cast<Eigen::Index>(rng.below(30));
    const Dataset data = random_instance(rng, n, p, 0.5 + rng.uniform());
    const auto lin = fit_linear(data, q, lambda, config);
    const auto ker = fit_kernel(data, KernelSpec::linear(), q, lambda, config);
    const Eigen::VectorXd a = lin.model.decision_values(data.x());
    const Eigen::VectorXd b = ker.model.decision_values(data.x());
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    sign_mismatches += static_cast<int>((sign_labels(a) - sign_labels(b)).cwiseAbs().count());
  }
  return {make("linear-kernel", "decision_values_agree", worst <= 1e-4, worst, 1e-4, std::to_string(instances) + " instances"),
          make("linear-kernel", "predicted_signs_agree", sign_mismatches == 0, sign_mismatches, 0)};
}

std::vector<CheckResult> weights_family(const VerifyOptions& opt) {
  Rng rng(opt.seed + 5);
  double worst = 0.0;
  double worst_scaled = 0.0;
  SolverConfig config;
  config.tol = 1e-10;
  config.max_iter = 200000;
  for (int k = 0; k < 8; ++k) {
    const double q = kQValues[k % 4];
    const double lambda = log_uniform(rng, 0.01, 0.5);
    const Dataset plain = random_instance(rng, 30, 3, 1.0);
    const Dataset unit = plain.with_class_weights(1.0, 1.0);
    const auto a = fit_linear(plain, q, lambda, config);
    const auto b = fit_linear(unit, q, lambda, config);
    worst = std::max({worst, std::abs(a.model.beta0 - b.model.beta0), (a.model.beta - b.model.beta).cwiseAbs().maxCoeff()});
    const KernelSpec spec = KernelSpec::gaussian(0.5);
    const auto ka = fit_kernel(plain, spec, q, lambda, config);
    const auto kb = fit_kernel(unit, spec, q, lambda, config);
    worst = std::max({worst, std::abs(ka.model.beta0 - kb.model.beta0), (ka.model.alpha - kb.model.alpha).cwiseAbs().maxCoeff()});
    // Doubling every weight is the same problem at half the penalty.
    const auto doubled = fit_linear(plain.with_class_weights(2.0, 2.0), q, lambda, config);
    const auto halved = fit_linear(plain, q, lambda / 2.0, config);
    worst_scaled = std::max({worst_scaled, std::abs(doubled.model.beta0 - halved.model.beta0),
                             (doubled.model.beta - halved.model.beta).cwiseAbs().maxCoeff()});
  }
  return {make("weights", "unit_weights_equal_unweighted", worst <= 1e-8, worst, 1e-8, "linear and gaussian-kernel coefficients"),
          make("weights", "uniform_weight_two_equals_half_lambda", worst_scaled <= 1e-6, worst_scaled, 1e-6)};
}

std::vector<CheckResult> bench_family(const VerifyOptions& opt) {
  const Dataset data = gen_example(1, 500, 50, opt.seed);
  const std::vector<double> lambdas = {0.01, 0.1, 1.0, 10.0, 100.0};
  const auto start = std::chrono::steady_clock::now();
  const auto fits = fit_linear_path(data, 1.0, lambdas);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  int converged = 0;
  for (const auto& f : fits) converged += f.report.converged;
  return {make("bench", "example1_five_lambda_path_seconds", seconds < 5.0 && converged == 5, seconds, 5.0,
               std::to_string(converged) + "/5 lambdas converged")};
}

std::vector<CheckResult> protocol_family(const VerifyOptions& opt) {
  const int seeds = opt.quick ? 2 : 5;
  double worst = 0.0;
  std::string errors;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = opt.seed + 100 + static_cast<std::uint64_t>(s);
    const Dataset data = gen_example(1, 500, 50, seed);
    const auto [train, test] = train_test_split(data, 2.0 / 3.0, seed);
    CvPlan plan;
    plan.seed = seed;
    if (opt.quick) plan.lambda_grid = log_grid(1e-3, 1e1, 12);
    const auto cv = cross_validate(train, 1.0, std::nullopt, plan);
    const double err = misclassification_rate(cv.model, test);
    worst = std::max(worst, err);
    errors += (errors.empty() ? "" : ",") + format_double(err);
  }
  return {make("protocol", "example1_split_cv_test_error", worst < 0.10, worst, 0.10, "test errors per seed: " + errors)};
}

std::vector<CheckResult> bayes_family(const VerifyOptions& opt) {
  const int seeds = opt.quick ? 2 : 10;
  const Eigen::Index n_test = opt.quick ? 20000 : 100000;
  int within = 0;
  double worst_gap = -1.0;
  std::string gaps;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = opt.seed + 200 + static_cast<std::uint64_t>(s);
    const auto mixture = gen_mixture(200, seed);
    CvPlan plan;
    plan.seed = seed;
    plan.lambda_grid = log_grid(1e-3, 1e0, opt.quick ? 6 : 10);
    SolverConfig config;
    config.tol = 1e-4;
    const auto cv = cross_validate(mixture.data, 1.0, KernelSpec::gaussian(1.0), plan, config);
    const auto bayes = oracle::bayes_error_mc(mixture.oracle, n_test, seed + 7);
    const auto model = oracle::model_error_mc(mixture.oracle, cv.model, n_test, seed + 7);
    const double gap = model.rate - bayes.rate;
    worst_gap = std::max(worst_gap, gap);
    within += gap <= 0.05;
    gaps += (gaps.empty() ? "" : ",") + format_double(std::round(gap * 1e4) / 1e4);
  }
  const int needed = (seeds * 8 + 9) / 10;
  return {make("bayes", "kernel_dwd_within_0.05_of_bayes_rate", within >= needed, within, needed,
               std::to_string(within) + "/" + std::to_string(seeds) + " seeds within 0.05; gaps " + gaps)};
}

}  // namespace

const std::vector<std::string>& families() {
  static const std::vector<std::string> names = {"loss",    "fisher",   "descent", "oracle",   "constrained",
                                                 "linear-kernel", "weights", "bench", "protocol", "bayes"};
  return names;
}

std::vector<CheckResult> run_family(const std::string& family, const VerifyOptions& options) {
  if (family == "loss") return loss_family(options);
  if (family == "fisher") return fisher_family(options);
  if (family == "descent") return descent_family(options);
  if (family == "oracle") return oracle_family(options);
  if (family == "constrained") return constrained_family(options);
  if (family == "linear-kernel") return linear_kernel_family(options);
  if (family == "weights") return weights_family(options);
  if (family == "bench") return bench_family(options);
  if (family == "protocol") return protocol_family(options);
  if (family == "bayes") return bayes_family(options);
  throw InvalidArgument("unknown verification family '" + family + "'");
}

std::string to_json_line(const CheckResult& r) {
  const nlohmann::json j = {{"family", r.family},     {"check", r.name},         {"passed", r.passed},
                            {"measured", r.measured}, {"threshold", r.threshold}, {"detail", r.detail}};
  return j.dump();
}

}  // namespace dwd::verify
