#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dwd/error.hpp"
#include "dwd/loss.hpp"
#include "dwd/rng.hpp"

using namespace dwd;

namespace {

/// Grid minimizer of eta V(f) + (1-eta) V(-f) on [-10, 10], written against the
/// printed loss formula rather than the library's evaluation.
double grid_argmin(double q, double eta, double step = 1e-4) {
  auto v = [q](double u) {
    return u <= q / (q + 1.0) ? 1.0 - u : std::pow(q, q) / (std::pow(q + 1.0, q + 1.0) * std::pow(u, q));
  };
  double best_f = 0.0, best = INFINITY;
  const long steps = std::lround(20.0 / step);
  for (long k = 0; k <= steps; ++k) {
    const double f = -10.0 + static_cast<double>(k) * step;
    const double r = eta * v(f) + (1.0 - eta) * v(-f);
    if (r < best) best = r, best_f = f;
  }
  return best_f;
}

}  // namespace

TEST_CASE("loss spec constants") {
  const LossSpec one(1.0);
  CHECK(one.threshold() == 0.5);
  CHECK(one.lipschitz() == 4.0);
  const LossSpec four(4.0);
  CHECK(four.threshold() == doctest::Approx(0.8));
  CHECK(four.lipschitz() == doctest::Approx(25.0 / 4.0));
  for (const double q : {0.1, 0.5, 2.0, 8.0, 100.0}) {
    const LossSpec s(q);
    CHECK(s.threshold() > 0.0);
    CHECK(s.threshold() < 1.0);
    CHECK(s.lipschitz() > 4.0);
  }
  CHECK_THROWS_AS(LossSpec{0.0}, InvalidArgument);
  CHECK_THROWS_AS(LossSpec{-1.0}, InvalidArgument);
  CHECK_THROWS_AS(LossSpec{INFINITY}, InvalidArgument);
  CHECK_THROWS_AS(LossSpec{std::nan("")}, InvalidArgument);
}

TEST_CASE("loss values at hand-computed points") {
  const LossSpec one(1.0);
  CHECK(loss_value(one, 0.0) == 1.0);
  CHECK(loss_value(one, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(loss_value(one, 0.5) == 0.5);
  CHECK(loss_value(LossSpec(4.0), 0.8) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(loss_value(one, -2.0) == 3.0);
  CHECK(loss_value(one, 4.0) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
}

TEST_CASE("loss is continuous at the branch point and positive far out") {
  for (const double q : {0.1, 0.5, 1.0, 4.0, 8.0, 50.0, 500.0}) {
    const LossSpec s(q);
    const double t = s.threshold();
    CHECK(loss_value(s, t) == doctest::Approx(1.0 / (q + 1.0)).epsilon(1e-14));
    CHECK(loss_value(s, std::nextafter(t, 2.0)) == doctest::Approx(1.0 / (q + 1.0)).epsilon(1e-12));
    CHECK(loss_value(s, 2.0) > 0.0);
    CHECK(std::isfinite(loss_value(s, 1e6)));
  }
}

TEST_CASE("loss derivative at hand-computed points") {
  const LossSpec one(1.0);
  CHECK(loss_derivative(one, 0.2) == -1.0);
  CHECK(loss_derivative(one, 1.0) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(loss_derivative(one, 0.5) == -1.0);
  const double far = loss_derivative(one, 1e8);
  CHECK(far < 0.0);
  CHECK(far > -1e-16);
  for (const double q : {0.5, 1.0, 4.0, 8.0}) {
    const LossSpec s(q);
    for (const double u : {-5.0, 0.0, 0.3, 0.9, 1.5, 10.0}) {
      CHECK(loss_derivative(s, u) >= -1.0);
      CHECK(loss_derivative(s, u) < 0.0);
    }
  }
}

TEST_CASE("derivative matches central differences") {
  Rng rng(11);
  for (int k = 0; k < 5000; ++k) {
    const LossSpec s(0.1 + 19.9 * rng.uniform());
    const double u = -3.0 + 8.0 * rng.uniform();
    const double h = 1e-6;
    const double fd = (loss_value(s, u + h) - loss_value(s, u - h)) / (2.0 * h);
    if (std::abs(u - s.threshold()) > 1e-5) {
      REQUIRE(std::abs(fd - loss_derivative(s, u)) <= 1e-5 * std::abs(loss_derivative(s, u)));
    } else {
      REQUIRE(std::abs(fd - loss_derivative(s, u)) <= 1e-3);
    }
  }
}

TEST_CASE("majorization examples") {
  const LossSpec one(1.0);
  CHECK(check_majorization(one, 0.7, 0.7));
  const double lhs = loss_value(one, 2.0);
  const double rhs = loss_value(one, 0.0) + loss_derivative(one, 0.0) * 2.0 + 0.5 * 4.0 * 4.0;
  CHECK(lhs < rhs);
  CHECK(check_majorization(one, 2.0, 0.0));
}

TEST_CASE("majorization holds on random triples and fails with too little curvature") {
  Rng rng(5);
  int failures_with_unit_curvature = 0;
  for (int k = 0; k < 100000; ++k) {
    const LossSpec s(std::exp(std::log(0.1) + rng.uniform() * std::log(200.0)));
    const double t = -3.0 + 9.0 * rng.uniform();
    const double e = -3.0 + 9.0 * rng.uniform();
    REQUIRE(check_majorization(s, t, e));
    failures_with_unit_curvature += !check_majorization(s, t, e, 1.0);
  }
  CHECK(failures_with_unit_curvature > 0);
}

TEST_CASE("derivative is Lipschitz with constant (q+1)^2/q, attained near the branch point") {
  Rng rng(6);
  for (int k = 0; k < 50000; ++k) {
    const LossSpec s(0.1 + 9.9 * rng.uniform());
    const double a = -2.0 + 6.0 * rng.uniform();
    const double b = -2.0 + 6.0 * rng.uniform();
    REQUIRE(std::abs(loss_derivative(s, a) - loss_derivative(s, b)) <= s.lipschitz() * std::abs(a - b) * (1 + 1e-12));
  }
  const LossSpec s(2.0);
  const double t = s.threshold();
  const double slope = (loss_derivative(s, t + 1e-7) - loss_derivative(s, t)) / 1e-7;
  CHECK(slope == doctest::Approx(s.lipschitz()).epsilon(1e-5));
}

TEST_CASE("loss is convex on sampled chords") {
  Rng rng(8);
  for (int k = 0; k < 20000; ++k) {
    const LossSpec s(0.1 + 19.9 * rng.uniform());
    const double a = -3.0 + 9.0 * rng.uniform();
    const double b = -3.0 + 9.0 * rng.uniform();
    const double w = rng.uniform();
    REQUIRE(loss_value(s, w * a + (1 - w) * b) <= w * loss_value(s, a) + (1 - w) * loss_value(s, b) + 1e-12);
  }
}

TEST_CASE("large q approaches the hinge loss") {
  const LossSpec s(1e3);
  for (const double u : {-1.0, 0.0, 0.5, 1.0, 2.0}) CHECK(std::abs(loss_value(s, u) - std::max(1.0 - u, 0.0)) <= 1e-2);
}

TEST_CASE("loss decreases as q grows for positive margins") {
  const double qs[] = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0};
  for (int k = 1; k <= 300; ++k) {
    const double u = 0.01 * k;
    for (std::size_t a = 1; a < std::size(qs); ++a) {
      REQUIRE(loss_value(LossSpec(qs[a]), u) <= loss_value(LossSpec(qs[a - 1]), u));
    }
  }
}

TEST_CASE("conditional risk") {
  const LossSpec one(1.0);
  CHECK(conditional_risk(one, 0.5, 0.0) == 1.0);
  CHECK(conditional_risk(one, 0.8, 1.0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(conditional_risk(one, 1.0, -1.0) == 2.0);
}

TEST_CASE("population minimizer closed form") {
  CHECK(population_minimizer(LossSpec(1.0), 0.5).value == 0.0);
  CHECK(population_minimizer(LossSpec(1.0), 0.8).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(population_minimizer(LossSpec(4.0), 0.9).value == doctest::Approx(0.8 * std::pow(9.0, 0.2)).epsilon(1e-14));
  CHECK(population_minimizer(LossSpec(1.0), 0.2).value == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("population minimizer agrees with a grid search of the conditional risk") {
  // Frozen from grid_argmin at step 1e-4: q=1, eta=0.8 -> 1.0; q=4, eta=0.9 -> 1.2415.
  CHECK(std::abs(grid_argmin(1.0, 0.8) - 1.0) <= 1e-4);
  CHECK(std::abs(grid_argmin(4.0, 0.9) - 1.2415) <= 1e-4);
  for (const double q : {0.5, 1.0, 4.0, 8.0}) {
    for (int k = 1; k < 20; ++k) {
      if (k == 10) continue;
      const double eta = k / 20.0;
      const double closed = population_minimizer(LossSpec(q), eta).value;
      REQUIRE(std::abs(closed - grid_argmin(q, eta, 1e-3)) <= 1e-3);
    }
  }
}

TEST_CASE("population minimizer sign, symmetry and saturation") {
  for (const double q : {0.5, 1.0, 4.0, 8.0}) {
    const LossSpec s(q);
    for (int k = 1; k < 100; ++k) {
      const double eta = k / 100.0;
      const double f = population_minimizer(s, eta).value;
      if (k != 50) CHECK((f > 0) == (eta > 0.5));
      CHECK(f == doctest::Approx(-population_minimizer(s, 1.0 - eta).value).epsilon(1e-12));
    }
    const auto top = population_minimizer(s, 1.0);
    CHECK(top.saturated);
    CHECK(top.value == doctest::Approx(1e3 * q / (q + 1.0)));
    const auto bottom = population_minimizer(s, 0.0);
    CHECK(bottom.saturated);
    CHECK(bottom.value == doctest::Approx(-1e3 * q / (q + 1.0)));
    CHECK_FALSE(population_minimizer(s, 0.7).saturated);
  }
  CHECK_THROWS_AS((void)population_minimizer(LossSpec(1.0), 1.5), InvalidArgument);
  CHECK_THROWS_AS((void)population_minimizer(LossSpec(1.0), -0.1), InvalidArgument);
}
