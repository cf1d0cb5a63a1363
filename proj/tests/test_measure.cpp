#include <cmath>
#include <vector>

#include "doctest.h"
#include "qsdlab/error.hpp"
#include "qsdlab/measure.hpp"

using namespace qsdlab;
using namespace qsdlab::measure;

TEST_SUITE("measure") {
  TEST_CASE("default grid puts 2 and 3 on edges") {
    BinGrid g;
    CHECK(g.width() == doctest::Approx(0.05));
    CHECK(g.edge(40) == 2.0);
    CHECK(g.edge(60) == 3.0);
    CHECK(g.index(1.999) == 39);
    CHECK(g.index(2.0) == 40);
    CHECK(g.index(-1.0) == 0);
    CHECK(g.index(5.0) == 99);
    CHECK_THROWS_AS((BinGrid{0, 5, 0}.validate()), UsageError);
    CHECK_THROWS_AS((BinGrid{1, 1, 10}.validate()), UsageError);
  }

  TEST_CASE("samples to masses") {
    std::vector<double> xs{0.01, 0.02, 1.99, 2.5, 4.0};
    const auto m = EmpiricalMeasure::from_samples(xs);
    CHECK(m.masses()[0] == doctest::Approx(0.4));
    CHECK(m.mass_d1() == doctest::Approx(0.6));
    CHECK(m.mass_between(2.0, 3.0) == doctest::Approx(0.2));
    CHECK_THROWS_AS(EmpiricalMeasure::from_samples(std::vector<double>{}), EstimationError);
  }

  TEST_CASE("total variation") {
    BinGrid g{0, 1, 4};
    EmpiricalMeasure a(g, {1, 0, 0, 0}), b(g, {0, 0, 0, 1}), c(g, {0.5, 0, 0, 0.5});
    CHECK(tv_distance(a, b) == doctest::Approx(1.0));
    CHECK(tv_distance(a, c) == doctest::Approx(0.5));
    CHECK(tv_distance(a, a) == 0.0);
    CHECK(tv_distance(a, c) == tv_distance(c, a));
    EmpiricalMeasure d(BinGrid{0, 1, 5}, {1, 0, 0, 0, 0});
    CHECK_THROWS_AS(tv_distance(a, d), UsageError);
  }

  TEST_CASE("binning a density integrates it exactly") {
    // Density 2x on (0,1) at nodes h..1-h, zero one step beyond both ends.
    const int n = 1000;
    std::vector<double> xs, f;
    for (int i = 1; i < n; ++i) {
      xs.push_back(double(i) / n);
      f.push_back(2.0 * i / n);
    }
    const auto m = bin_density(xs, f, BinGrid{0, 1, 4});
    // the interpolant drops linearly to 0 on the last cell: total mass 1 - h
    const double total = 1.0 - 1.0 / n;
    CHECK(m.masses()[0] == doctest::Approx(0.0625 / total).epsilon(1e-9));
    CHECK(m.masses()[1] == doctest::Approx(0.1875 / total).epsilon(1e-9));
  }

  TEST_CASE("histogram merge") {
    Histogram a, b;
    a.add(0.1);
    a.add(0.2);
    b.add_all(std::vector<double>{3.3, 4.4});
    a.merge(b);
    CHECK(a.total() == 4);
    CHECK(a.measure().mass_d1() == doctest::Approx(0.5));
    CHECK_THROWS_AS(Histogram().measure(), EstimationError);
  }
}
