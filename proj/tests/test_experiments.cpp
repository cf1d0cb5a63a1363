#include <cmath>
#include <limits>

#include "doctest.h"
#include "qsdlab/config.hpp"
#include "qsdlab/error.hpp"
#include "qsdlab/experiments.hpp"

using namespace qsdlab;
using namespace qsdlab::experiments;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

TEST_SUITE("experiments") {
  TEST_CASE("config defaults and overrides") {
    const auto c = config::parse_run_config("{}");
    CHECK(c.sweep.n_points == 25);
    CHECK(c.sweep.threshold == 0.03);
    CHECK(c.fv.n_particles == 10000);
    const auto d = config::parse_run_config(
        R"({"model":{"alpha":2},"sim":{"seed":9,"window":[1,2]},"fv":{"bins":50},"chain":{"n1":1,"n2":1,"Q":[[0.5,0.5],[0,0.5]]}})");
    CHECK(d.model.alpha == 2.0);
    CHECK(d.sim.seed == 9);
    CHECK(d.sim.window->second == 2.0);
    CHECK(d.fv_options().grid.bins == 50);
    CHECK_FALSE(d.chain.inline_json.empty());
    const auto back = config::parse_run_config(config::to_json(d));
    CHECK(config::to_json(back) == config::to_json(d));
  }

  TEST_CASE("config rejects unknown or malformed entries") {
    CHECK_THROWS_AS(config::parse_run_config(R"({"extra":{}})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"sim":{"dtt":0.1}})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"sim":{"dt":"fast"}})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"sim":[1]})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"sweep":{"n_points":1}})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"model":{"shape":"cubic"}})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"model":{"alpha":-1}})"), DomainError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"chain":{"n1":1}})"), UsageError);
    CHECK_THROWS_AS(config::parse_run_config("[1,2"), UsageError);
    CHECK_THROWS_AS(config::load_run_config("/nonexistent.json"), UsageError);
  }

  TEST_CASE("geometric grid") {
    const auto g = geometric_grid(0.2, 3.0, 25);
    CHECK(g.size() == 25);
    CHECK(g.front() == 0.2);
    CHECK(g.back() == 3.0);
    CHECK(g[1] / g[0] == doctest::Approx(g[24] / g[23]));
    CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 3), UsageError);
  }

  TEST_CASE("critical crossing by interpolation") {
    std::vector<double> a, m;
    for (int i = 0; i <= 30; ++i) {
      a.push_back(0.5 + 0.05 * i);
      m.push_back(std::max(0.0, a.back() - 1.0));
    }
    CHECK(locate_critical(a, m, 0.03) == doctest::Approx(1.03).epsilon(1e-12));
    CHECK_THROWS_AS(locate_critical(a, std::vector<double>(a.size(), 0.0), 0.03), EstimationError);
    CHECK(locate_critical({1, 2, 3, 4}, {0.0, kNaN, 0.0, 0.1}, 0.05) == doctest::Approx(3.5));
    CHECK(locate_critical({1, 2, 3, 4}, {0.1, 0.0, 0.0, 0.1}, 0.05) == doctest::Approx(3.5));
  }

  TEST_CASE("isotonic deviation") {
    CHECK(isotonic_deviation({0, 0.1, 0.2, 0.3}) == 0.0);
    CHECK(isotonic_deviation({0, 1, 0}) == doctest::Approx(0.5));
    CHECK(isotonic_deviation({0.2, kNaN, 0.1}) == doctest::Approx(0.05));
  }

  TEST_CASE("small sweep is aligned and monotone in the regimes") {
    auto c = config::parse_run_config(
        R"({"sweep":{"n_points":3,"lo_factor":0.5,"hi_factor":2.5,"t_end":6},"fv":{"n_particles":1500}})");
    const auto r = bifurcation_sweep(c, 2.8674);
    REQUIRE(r.alphas.size() == 3);
    CHECK(r.mass_d1.size() == 3);
    CHECK(r.rate_hat.size() == 3);
    CHECK(r.alphas[0] == doctest::Approx(0.5 * 2.8674));
    CHECK(r.mass_d1[0] < 0.02);
    CHECK(r.mass_d1[2] > 0.05);
  }

  TEST_CASE("time change rows") {
    auto c = config::parse_run_config(R"({"timechange":{"alphas":[0.5,2],"n_paths":3000},"spectral":{"n_cells":1024}})");
    const auto rows = timechange_check(c);
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) {
      if (r.engine == "spectral") CHECK(std::abs(r.deviation) < 1e-12);
      if (r.alpha == 1.0) CHECK(r.ratio == 1.0);
    }
    CHECK(std::abs(rows[5].deviation) < 0.2);
  }

  TEST_CASE("basin from the Dirac mass stays out of (0,2)") {
    auto c = config::parse_run_config(
        R"({"basin":{"alpha_factors":[2],"t_end":4},"fv":{"n_particles":1500},"spectral":{"n_cells":1024}})");
    const auto rep = basin_experiment(c, 2.8674);
    REQUIRE(rep.runs.size() == 2);
    CHECK(rep.runs[0].start == "dirac");
    CHECK(rep.runs[0].mass_d1_final == 0.0);
    CHECK(rep.runs[0].tv < 0.2);
    CHECK(rep.runs[1].mass_d1_initial == doctest::Approx(0.01));
  }

  TEST_CASE("binned nu2 lives on (3,5)") {
    const auto m = binned_nu2(1.0, 1024);
    CHECK(m.mass_between(3.0, 5.0) == doctest::Approx(1.0));
  }
}
