#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dwd/error.hpp"
#include "dwd/kernel.hpp"
#include "dwd/oracle.hpp"
#include "helpers.hpp"

using namespace dwd;
using testing::gaussian_classes;
using testing::max_abs_diff;

namespace {

SolverConfig tight(double tol = 1e-10) {
  SolverConfig c;
  c.tol = tol;
  c.max_iter = 500000;
  return c;
}

}  // namespace

TEST_CASE("kernel values") {
  const Eigen::Vector2d a(1, 2), b(3, 4);
  CHECK(kernel_value(KernelSpec::linear(), a, b) == 11.0);
  CHECK(kernel_value(KernelSpec::gaussian(0.7), a, a) == 1.0);
  CHECK(kernel_value(KernelSpec::gaussian(0.5), a, b) == doctest::Approx(std::exp(-4.0)));
  CHECK(kernel_value(KernelSpec::polynomial(1.0, 2), Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0)) == 4.0);
  CHECK(kernel_value(KernelSpec::polynomial(0.5, 3), a, b) == doctest::Approx(std::pow(11.5, 3)));
  CHECK_THROWS_AS((void)kernel_value(KernelSpec::linear(), a, Eigen::Vector3d(1, 2, 3)), InvalidArgument);
}

TEST_CASE("kernel spec validation and names") {
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::polynomial(1.0, 0), InvalidArgument);
  CHECK(parse_kernel_kind("gauss") == KernelKind::gaussian);
  CHECK(parse_kernel_kind("rbf") == KernelKind::gaussian);
  CHECK(parse_kernel_kind("poly") == KernelKind::polynomial);
  CHECK(parse_kernel_kind("linear") == KernelKind::linear);
  CHECK_THROWS_AS((void)parse_kernel_kind("sigmoid"), InvalidArgument);
  CHECK(KernelSpec::gaussian(1.0).name() == "gaussian");
}

TEST_CASE("kernel matrices are symmetric and positive semidefinite") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 3, 0.5);
  CHECK(kernel_matrix(KernelSpec::polynomial(1.0, 2), one)(0, 0) == doctest::Approx(std::pow(1.75, 2)));
  Rng rng(1);
  Eigen::MatrixXd x(150, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (const auto& spec : {KernelSpec::linear(), KernelSpec::polynomial(1.0, 3), KernelSpec::gaussian(0.3)}) {
    const Eigen::MatrixXd k = kernel_matrix(spec, x);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const double floor = -1e-8 * k.trace() / double(k.rows());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff() >= floor);
    CHECK((k - cross_kernel(spec, x, x)).cwiseAbs().maxCoeff() <= 1e-12 * k.cwiseAbs().maxCoeff());
  }
  CHECK(kernel_matrix(KernelSpec::gaussian(2.0), x).diagonal().isOnes());
}

TEST_CASE("median heuristic") {
  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 1, 0;
  CHECK(median_heuristic_sigma(two) == 1.0);

  Rng rng(2);
  Eigen::MatrixXd x(40, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const double s = median_heuristic_sigma(x);
  Eigen::MatrixXd doubled(80, 3);
  doubled << x, x;
  CHECK(median_heuristic_sigma(doubled) == doctest::Approx(s).epsilon(1e-12));
  CHECK(median_heuristic_sigma(3.0 * x) == doctest::Approx(s / 9.0).epsilon(1e-12));

  Eigen::MatrixXd big(300, 2);
  for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = rng.normal();
  CHECK(median_heuristic_sigma(big, 5) == median_heuristic_sigma(big, 5));
  CHECK(median_heuristic_sigma(big, 5) == doctest::Approx(median_heuristic_sigma(big, 6)).epsilon(0.05));

  CHECK_THROWS_AS((void)median_heuristic_sigma(Eigen::MatrixXd::Ones(5, 2)), InvalidArgument);
  CHECK_THROWS_AS((void)median_heuristic_sigma(Eigen::MatrixXd::Ones(1, 2)), InvalidArgument);
}

TEST_CASE("decision values") {
  const Dataset d = gaussian_classes(3, 10, 2);
  KernelModel m{0.7, Eigen::VectorXd::Zero(10), KernelSpec::gaussian(0.5), 1.0, 0.1, d.x()};
  Eigen::MatrixXd fresh(3, 2);
  fresh << 0, 0, 1, 1, -2, 0.5;
  CHECK(m.decision_values(fresh) == Eigen::VectorXd::Constant(3, 0.7));

  m.alpha = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
  const Eigen::VectorXd fitted = m.decision_values(d.x());
  CHECK(max_abs_diff(fitted, Eigen::VectorXd::Constant(10, 0.7) + kernel_matrix(m.kernel, d.x()) * m.alpha) <= 1e-12);
  for (Eigen::Index j = 0; j < fresh.rows(); ++j) {
    double sum = m.beta0;
    for (Eigen::Index i = 0; i < 10; ++i) {
      sum += m.alpha[i] * std::exp(-0.5 * (fresh.row(j) - d.x().row(i)).squaredNorm());
    }
    CHECK(m.decision_values(fresh)[j] == doctest::Approx(sum).epsilon(1e-13));
  }
  CHECK_THROWS_AS((void)m.decision_values(Eigen::MatrixXd::Zero(2, 3)), InvalidArgument);
}

TEST_CASE("objective traces never rise") {
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    const Dataset d = gaussian_classes(100 + seed, 20 + seed, 2, 0.7);
    const double q = std::array{0.5, 1.0, 4.0, 8.0}[seed % 4];
    const KernelSpec spec = seed % 2 ? KernelSpec::gaussian(0.5) : KernelSpec::polynomial(1.0, 2);
    const auto fit = fit_kernel(d, spec, q, 0.02 * double(1 + seed % 5));
    for (std::size_t k = 1; k < fit.report.objective_trace.size(); ++k) {
      REQUIRE(fit.report.objective_trace[k] <= fit.report.objective_trace[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("linear kernel reproduces the linear solver") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Dataset d = gaussian_classes(200 + seed, 30, 3, 0.8);
    const double q = std::array{0.5, 1.0, 4.0, 8.0}[seed];
    const auto lin = fit_linear(d, q, 0.1, tight());
    const auto ker = fit_kernel(d, KernelSpec::linear(), q, 0.1, tight());
    const Eigen::VectorXd a = lin.model.decision_values(d.x());
    const Eigen::VectorXd b = ker.model.decision_values(d.x());
    CHECK(max_abs_diff(a, b) <= 1e-4);
    CHECK(std::abs(lin.report.final_objective - ker.report.final_objective) <= 1e-8);
  }
}

TEST_CASE("gaussian fit matches the gradient-descent oracle and is a fixed point") {
  const Dataset d = gaussian_classes(300, 30, 2, 0.8);
  const KernelSpec spec = KernelSpec::gaussian(0.8);
  const auto fit = fit_kernel(d, spec, 1.0, 0.05, tight());
  const auto ref = oracle::gd_solve_penalized(d, 1.0, 0.05, spec);
  CHECK(std::abs(fit.report.final_objective - ref.objective) <= 1e-6);
  const auto ref_values = oracle::reference_decision_values(ref, d, d.x(), spec);
  const Eigen::VectorXd ours = fit.model.decision_values(d.x());
  for (Eigen::Index i = 0; i < d.n(); ++i) CHECK(std::abs(ours[i] - ref_values[std::size_t(i)]) <= 1e-4);

  const Eigen::MatrixXd gram = kernel_matrix(spec, d.x());
  const auto system = build_kernel_system(d, gram, 1.0, 0.05, 0.0);
  double beta0 = fit.model.beta0;
  Eigen::VectorXd alpha = fit.model.alpha;
  kernel_mm_step(d, gram, system, 1.0, 0.05, beta0, alpha);
  CHECK(std::abs(beta0 - fit.model.beta0) <= 1e-10);
  CHECK(max_abs_diff(gram * alpha, gram * fit.model.alpha) <= 1e-10);
}

TEST_CASE("converged kernel fits satisfy the first-order condition") {
  const Dataset d = gaussian_classes(301, 40, 3);
  SolverConfig c;
  const auto fit = fit_kernel(d, KernelSpec::gaussian(0.3), 4.0, 0.05, c);
  REQUIRE(fit.report.converged);
  const Eigen::MatrixXd gram = kernel_matrix(KernelSpec::gaussian(0.3), d.x());
  const double g = kernel_objective_gradient(d, gram, fit.model.beta0, fit.model.alpha, 4.0, 0.05).cwiseAbs().maxCoeff();
  CHECK(g <= 10.0 * c.tol * fit.report.gradient_scale);
}

TEST_CASE("null-space directions of the Gram matrix change nothing") {
  // Duplicated points make the linear Gram matrix rank deficient.
  const Dataset base = gaussian_classes(302, 10, 1);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < 10; ++i) rows.insert(rows.end(), {i, i});
  const Dataset d = base.subset(rows);
  const auto fit = fit_kernel(d, KernelSpec::linear(), 1.0, 0.1);
  CHECK(fit.report.converged);
  const Eigen::MatrixXd gram = kernel_matrix(KernelSpec::linear(), d.x());
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(20);
  nu[0] = 1.0;
  nu[1] = -1.0;
  REQUIRE((gram * nu).cwiseAbs().maxCoeff() <= 1e-14);
  const double before = kernel_objective(d, gram, fit.model.beta0, fit.model.alpha, 1.0, 0.1);
  const double after = kernel_objective(d, gram, fit.model.beta0, fit.model.alpha + 3.0 * nu, 1.0, 0.1);
  CHECK(after == doctest::Approx(before).epsilon(1e-13));
  KernelModel shifted = fit.model;
  shifted.alpha += 3.0 * nu;
  CHECK(max_abs_diff(shifted.decision_values(d.x()), fit.model.decision_values(d.x())) <= 1e-12);
}

TEST_CASE("gaussian predictions are translation invariant") {
  const Dataset d = gaussian_classes(303, 35, 2);
  Eigen::MatrixXd moved = d.x();
  moved.rowwise() += Eigen::RowVector2d(5.0, -3.0);
  const Dataset shifted(moved, d.y());
  const KernelSpec spec = KernelSpec::gaussian(0.5);
  const auto a = fit_kernel(d, spec, 1.0, 0.05, tight());
  const auto b = fit_kernel(shifted, spec, 1.0, 0.05, tight());
  Eigen::MatrixXd probe(4, 2);
  probe << 0, 0, 1, -1, 2, 0.5, -1, 1;
  Eigen::MatrixXd probe_moved = probe;
  probe_moved.rowwise() += Eigen::RowVector2d(5.0, -3.0);
  CHECK(max_abs_diff(a.model.decision_values(probe), b.model.decision_values(probe_moved)) <= 1e-8);
}

TEST_CASE("kernel paths and argument errors") {
  const Dataset d = gaussian_classes(304, 30, 2);
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const auto path = fit_kernel_path(d, spec, 1.0, {0.5, 0.01, 0.1});
  REQUIRE(path.size() == 3);
  CHECK(path[1].model.lambda == 0.01);
  for (const auto& f : path) {
    const auto cold = fit_kernel(d, spec, 1.0, f.model.lambda);
    CHECK(std::abs(f.report.final_objective - cold.report.final_objective) <= 1e-6);
  }
  const auto single = fit_kernel_path(d, spec, 1.0, {0.1});
  CHECK(single[0].model.alpha == fit_kernel(d, spec, 1.0, 0.1).model.alpha);
  CHECK_THROWS_AS((void)fit_kernel(d, spec, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS((void)fit_kernel_gram(d, spec, Eigen::MatrixXd::Identity(3, 3), 1.0, 0.1), InvalidArgument);
}

TEST_CASE("duplicated points trigger jitter but still converge") {
  const Dataset base = gaussian_classes(305, 12, 2);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < 12; ++i) rows.insert(rows.end(), {i, i, i});
  const auto fit = fit_kernel(base.subset(rows), KernelSpec::gaussian(1.0), 1.0, 0.1);
  CHECK(fit.report.converged);
  CHECK(fit.report.jitter > 0.0);
  CHECK(std::isfinite(fit.report.final_objective));
}
