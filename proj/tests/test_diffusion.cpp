#include <cmath>
#include <vector>

#include "doctest.h"
#include "qsdlab/diffusion.hpp"
#include "qsdlab/error.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/rng.hpp"

using namespace qsdlab;
using namespace qsdlab::diffusion;

TEST_SUITE("diffusion") {
  TEST_CASE("config validation") {
    SimConfig c;
    CHECK_NOTHROW(c.validate());
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c.dt = 1e-3;
    c.alpha = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.alpha = 1.0;
    c.n_paths = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK(SimConfig{}.steps(1.0) == 1000);
  }

  TEST_CASE("initial laws") {
    auto law = InitialLaw::parse("0.01*uniform:0:2+0.99*dirac:4");
    CHECK(law.components().size() == 2);
    CHECK(law.mass_d1() == doctest::Approx(0.01));
    CHECK(InitialLaw::dirac(4).sample(1, 5) == 4.0);
    CHECK_THROWS_AS(InitialLaw::parse("0.5*dirac:1"), UsageError);
    CHECK_THROWS_AS(InitialLaw::parse("gauss:1"), UsageError);
    CHECK_THROWS_AS(InitialLaw::parse("dirac:7"), UsageError);
    CHECK_THROWS_AS(InitialLaw::parse("uniform:2:1"), UsageError);
    int in_d1 = 0;
    for (int i = 0; i < 100000; ++i) {
      const double x = law.sample(3, i);
      REQUIRE(x > 0.0);
      REQUIRE(x < 5.0);
      in_d1 += x < 2.0;
    }
    CHECK(in_d1 == doctest::Approx(1000).epsilon(0.15));
    const auto u = InitialLaw::uniform(0, 2);
    double m = 0;
    for (int i = 0; i < 100000; ++i) m += u.sample(3, i);
    CHECK(m / 100000 == doctest::Approx(1.0).epsilon(0.01));
    CHECK(InitialLaw::parse(law.describe()).mass_d1() == doctest::Approx(0.01));
  }

  TEST_CASE("trajectory is a replay of step_position") {
    SimConfig c{2.0, 1e-3, 0.05, 9, 1};
    const auto r = simulate_trajectory(1.9, c, 4, 1);
    double x = 1.9;
    for (std::uint64_t k = 0; k < c.steps(c.t_max); ++k) {
      const auto o = kernels::step_position(x, c.step_params(), rng::diffusion_noise(9, k, 4));
      x = o.position;
      if (o.status != kernels::Status::Alive) break;
    }
    CHECK(r.position == x);
    CHECK(r.region_history.front() == model::Region::D1);
  }

  TEST_CASE("paths entering [3,5) never return to (0,3)") {
    SimConfig c{1.0, 1e-3, 5.0, 2, 1};
    for (std::uint32_t p = 0; p < 200; ++p) {
      const auto r = simulate_trajectory(1.0, c, p, 1);
      bool seen_right = false;
      for (auto reg : r.region_history) {
        if (reg == model::Region::D2Right) seen_right = true;
        if (seen_right) REQUIRE((reg == model::Region::D2Right || reg == model::Region::Absorbed));
      }
      if (r.status == kernels::Status::AbsorbedAt0) CHECK_FALSE(seen_right);
    }
  }

  TEST_CASE("survival curve counts are monotone and worker independent") {
    SimConfig c{1.0, 1e-3, 2.0, 5, 5000};
    const auto times = uniform_time_grid(2.0, 0.1);
    CHECK(times.size() == 21);
    parallel::set_worker_count(1);
    const auto a = survival_curve(1.0, c, times);
    parallel::set_worker_count(3);
    const auto b = survival_curve(1.0, c, times);
    parallel::set_worker_count(0);
    CHECK(a.n_d1 == b.n_d1);
    CHECK(a.n_total == b.n_total);
    CHECK(a.n_total[0] == 5000);
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(a.n_total[i] <= a.n_total[i - 1]);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(a.n_d1[i] + a.n_d2right[i] <= a.n_total[i]);
  }

  TEST_CASE("survival of pure Brownian motion") {
    // From 0.5, (0,1] has sigma 1 and drift 1, so before leaving (0,1) the
    // path is a Brownian motion with unit drift. The probability of hitting 0
    // before 1 is (e^{-2 0.5} - e^{-2}) / (1 - e^{-2}).
    SimConfig c{1.0, 1e-4, 3.0, 21, 1};
    int hit0 = 0, hit1 = 0;
    for (std::uint32_t p = 0; p < 4000; ++p) {
      double x = 0.5;
      for (std::uint64_t k = 0;; ++k) {
        auto o = kernels::step_position(x, c.step_params(), rng::diffusion_noise(21, k, p));
        x = o.position;
        if (o.status == kernels::Status::AbsorbedAt0) {
          ++hit0;
          break;
        }
        if (x >= 1.0) {
          ++hit1;
          break;
        }
      }
    }
    const double p0 = (std::exp(-1.0) - std::exp(-2.0)) / (1 - std::exp(-2.0));
    CHECK(double(hit0) / (hit0 + hit1) == doctest::Approx(p0).epsilon(0.06));
  }

  TEST_CASE("lambda from an exact exponential curve") {
    SurvivalCurve c;
    c.n_paths = 1000000;
    for (int i = 0; i <= 100; ++i) {
      c.times.push_back(0.05 * i);
      const auto n = static_cast<std::uint64_t>(std::llround(1e6 * std::exp(-0.8 * 0.05 * i)));
      c.n_total.push_back(n);
      c.n_d1.push_back(n);
      c.n_d2right.push_back(0);
    }
    const auto e = lambda_from_survival(c, Component::Total);
    CHECK(e.lambda == doctest::Approx(0.8).epsilon(1e-4));
    CHECK(e.r_squared > 0.9999);
    const auto w = lambda_from_survival(c, Component::D1, std::make_pair(1.0, 2.0));
    CHECK(w.window_lo == doctest::Approx(1.0));
    CHECK(w.points == 21);
    CHECK_THROWS_AS(lambda_from_survival(c, Component::D2Right), EstimationError);
    CHECK_THROWS_AS(lambda_from_survival(c, Component::D1, std::make_pair(7.0, 8.0)), EstimationError);
  }

  TEST_CASE("component names") {
    CHECK(parse_component("D1") == Component::D1);
    CHECK(parse_component("D2right") == Component::D2Right);
    CHECK(parse_component("total") == Component::Total);
    CHECK_THROWS_AS(parse_component("D3"), UsageError);
  }

  TEST_CASE("rejection sampling") {
    SimConfig c{1.0, 1e-3, 1.0, 3, 2000};
    const auto r = sample_conditional_rejection(InitialLaw::dirac(4.0), c, 0.5);
    CHECK(r.survivors > 1000);
    CHECK(r.measure.mass_between(3.0, 5.0) == doctest::Approx(1.0));
    SimConfig tiny{1.0, 1e-3, 5.0, 3, 50};
    CHECK_THROWS_AS(sample_conditional_rejection(InitialLaw::dirac(4.0), tiny, 5.0), EstimationError);
  }
}
