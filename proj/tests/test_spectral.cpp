#include <cmath>

#include "doctest.h"
#include "qsdlab/error.hpp"
#include "qsdlab/model.hpp"
#include "qsdlab/spectral.hpp"

using namespace qsdlab;
using namespace qsdlab::spectral;

TEST_SUITE("spectral") {
  TEST_CASE("Dirichlet Laplacian") {
    // (1/2) u'' on (0,1): lambda = pi^2 / 2, density sin(pi x).
    const int n = 2048;
    const auto L = build_generator(0.0, 1.0, n, [](double) { return 1.0; }, [](double) { return 0.0; });
    const auto s = principal_eigenpair(L, 0.0, 1.0);
    CHECK(s.lambda == doctest::Approx(M_PI * M_PI / 2).epsilon(1e-6));
    const double h = 1.0 / n;
    for (std::size_t i = 0; i < s.x.size(); i += 200)
      CHECK(s.density[i] == doctest::Approx(M_PI / 2 * std::sin(M_PI * s.x[i])).epsilon(1e-5));
    double mass = 0;
    for (double d : s.density) mass += h * d;
    CHECK(mass == doctest::Approx(1.0));
  }

  TEST_CASE("constant drift on an interval") {
    // (1/2) u'' + b u' on (0,1): lambda = pi^2/2 + b^2/2.
    const double b = 1.5;
    const auto L = build_generator(0.0, 1.0, 4096, [](double) { return 1.0; }, [b](double) { return b; });
    const auto s = principal_eigenpair(L, 0.0, 1.0);
    CHECK(s.lambda == doctest::Approx(M_PI * M_PI / 2 + b * b / 2).epsilon(1e-6));
  }

  TEST_CASE("generator rows conserve mass away from the boundary") {
    const auto L = build_generator(make_grid(Interval::Left, 256, 1.0));
    for (std::size_t i = 1; i + 1 < L.size(); ++i) {
      CHECK(std::abs(L.lower[i] + L.diag[i] + L.upper[i]) < 1e-9 * std::abs(L.diag[i]));
      CHECK(L.lower[i] >= 0.0);
      CHECK(L.upper[i] >= 0.0);
    }
  }

  TEST_CASE("transpose and scaling") {
    const auto L = build_generator(make_grid(Interval::Right, 64, 2.0));
    std::vector<double> u(L.size()), v(L.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = std::sin(double(i));
      v[i] = std::cos(double(i) * 0.3);
    }
    const auto Lu = L.apply(u), LTv = L.apply_transpose(v);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      a += v[i] * Lu[i];
      b += LTv[i] * u[i];
    }
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(L.scaled(2.0).diag[5] == 2.0 * L.diag[5]);
  }

  TEST_CASE("eigen equations hold") {
    const auto s = solve(Interval::Left, 1.0, 1024);
    CHECK(s.residual < 1e-8);
    CHECK(s.lambda > 0.0);
    for (double d : s.density) CHECK(d >= 0.0);
    for (double r : s.right_vector) CHECK(r >= 0.0);
    const double h = 2.0 / 1024;
    double norm = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) norm += h * s.density[i] * s.right_vector[i];
    CHECK(norm == doctest::Approx(1.0));
  }

  TEST_CASE("lambda2 is linear in alpha to rounding") {
    const double base = solve(Interval::Right, 1.0).lambda;
    for (double a : {0.5, 2.0, 4.0}) CHECK(std::abs(solve(Interval::Right, a).lambda / (a * base) - 1.0) < 1e-12);
    CHECK(solve(Interval::Left, 0.3).lambda == solve(Interval::Left, 3.0).lambda);
  }

  TEST_CASE("refinement converges") {
    const auto levels = refinement_study(Interval::Left, 1.0, 4096, 3);
    REQUIRE(levels.size() == 3);
    CHECK(levels[1].n_cells == 8192);
    for (std::size_t k = 1; k < levels.size(); ++k)
      CHECK(std::abs(levels[k].lambda / levels[k - 1].lambda - 1.0) < 1e-4);
  }

  TEST_CASE("critical alpha") {
    const auto c = critical_alpha();
    CHECK(c.alpha_star == doctest::Approx(c.lambda1 / c.lambda2_unit));
    CHECK(c.alpha_star > 1.0);
    CHECK(c.relative_change < 1e-4);
  }

  TEST_CASE("whole-domain solve picks the smaller rate") {
    const auto c = critical_alpha();
    const auto below = solve_domain(0.5 * c.alpha_star, 5 * 1024);
    CHECK(below.lambda == doctest::Approx(0.5 * c.alpha_star * c.lambda2_unit).epsilon(1e-3));
    const auto above = solve_domain(2.0 * c.alpha_star, 5 * 1024);
    CHECK(above.lambda == doctest::Approx(c.lambda1).epsilon(1e-3));
    double d1 = 0;
    for (std::size_t i = 0; i < above.x.size(); ++i)
      if (above.x[i] < 2.0) d1 += above.density[i] * 5.0 / (5 * 1024);
    CHECK(d1 > 0.05);
  }

  TEST_CASE("input errors") {
    CHECK_THROWS_AS(make_grid(Interval::Left, 32), UsageError);
    CHECK_THROWS_AS(parse_interval("middle"), UsageError);
    CHECK(parse_interval("left") == Interval::Left);
    CHECK_THROWS_AS(solve(Interval::Left, -1.0), DomainError);
  }
}
