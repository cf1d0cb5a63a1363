#include "qsdlab/experiments.hpp"

#include <cmath>
#include <limits>

#include "qsdlab/diffusion.hpp"
#include "qsdlab/error.hpp"
#include "qsdlab/fleming_viot.hpp"
#include "qsdlab/output.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/spectral.hpp"

namespace qsdlab::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Outcome {
  double mass = kNaN;
  double rate = kNaN;
  std::string failure;
};

}  // namespace

std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw UsageError("geometric grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double r = std::log(hi / lo);
  for (int i = 0; i < n; ++i) g[i] = lo * std::exp(r * i / (n - 1));
  g.back() = hi;
  return g;
}

SweepResult bifurcation_sweep(const config::RunConfig& cfg, double alpha_star) {
  if (!(alpha_star > 0.0)) throw DomainError("alpha_star must be positive");
  const auto& sw = cfg.sweep;
  SweepResult out;
  out.alpha_star_spectral = alpha_star;
  out.threshold = sw.threshold;
  out.alphas = geometric_grid(sw.lo_factor * alpha_star, sw.hi_factor * alpha_star, sw.n_points);

  const auto law = diffusion::InitialLaw::parse(sw.init);
  auto opts = cfg.fv_options();
  opts.t_end = sw.t_end;
  opts.observation_times.clear();

  std::vector<Outcome> res(out.alphas.size());
  parallel::for_each_index(out.alphas.size(), [&](std::size_t i) {
    auto sim = cfg.sim_config();
    sim.alpha = out.alphas[i];
    try {
      auto r = fleming_viot::run_fv(law, sim, opts);
      res[i].mass = r.stationary.mass_d1();
      res[i].rate = r.rate_hat;
    } catch (const ExtinctionError& e) {
      res[i].failure = e.what();
    }
  });
  for (std::size_t i = 0; i < res.size(); ++i) {
    out.mass_d1.push_back(res[i].mass);
    out.rate_hat.push_back(res[i].rate);
    if (!res[i].failure.empty())
      out.failures.push_back("alpha " + std::to_string(out.alphas[i]) + ": " + res[i].failure);
  }
  try {
    out.alpha_star_empirical = locate_critical(out.alphas, out.mass_d1, sw.threshold);
  } catch (const EstimationError&) {
    out.alpha_star_empirical = kNaN;
  }
  return out;
}

SweepResult bifurcation_sweep(const config::RunConfig& cfg) {
  auto crit = spectral::critical_alpha(cfg.spectral.n_cells);
  auto out = bifurcation_sweep(cfg, crit.alpha_star);
  out.lambda1 = crit.lambda1;
  out.lambda2_unit = crit.lambda2_unit;
  return out;
}

double locate_critical(const std::vector<double>& alphas, const std::vector<double>& mass, double threshold) {
  if (alphas.size() != mass.size()) throw UsageError("alpha and mass grids differ in length");
  std::size_t prev = alphas.size();
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (std::isnan(mass[i])) continue;
    if (prev < alphas.size() && mass[prev] < threshold && mass[i] >= threshold) {
      const double w = (threshold - mass[prev]) / (mass[i] - mass[prev]);
      return alphas[prev] + w * (alphas[i] - alphas[prev]);
    }
    prev = i;
  }
  throw EstimationError("mass_D1 never crosses the threshold upward");
}

double locate_critical(const SweepResult& sweep) {
  return locate_critical(sweep.alphas, sweep.mass_d1, sweep.threshold);
}

double isotonic_deviation(const std::vector<double>& y) {
  // Pool-adjacent-violators on the non-missing values.
  std::vector<double> v;
  for (double x : y)
    if (!std::isnan(x)) v.push_back(x);
  struct Block {
    double sum;
    std::size_t n;
  };
  std::vector<Block> blocks;
  for (double x : v) {
    blocks.push_back({x, 1});
    while (blocks.size() > 1) {
      auto& b = blocks[blocks.size() - 1];
      auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.n <= b.sum / b.n) break;
      a.sum += b.sum;
      a.n += b.n;
      blocks.pop_back();
    }
  }
  double worst = 0.0;
  std::size_t k = 0;
  for (const auto& b : blocks)
    for (std::size_t j = 0; j < b.n; ++j, ++k) worst = std::max(worst, std::abs(v[k] - b.sum / b.n));
  return worst;
}

measure::EmpiricalMeasure binned_nu2(double alpha, int n_cells, measure::BinGrid grid) {
  auto s = spectral::solve(spectral::Interval::Right, alpha, n_cells);
  return measure::bin_density(s.x, s.density, grid);
}

BasinReport basin_experiment(const config::RunConfig& cfg, double alpha_star) {
  if (!(alpha_star > 0.0)) throw DomainError("alpha_star must be positive");
  const auto& bs = cfg.basin;
  BasinReport rep;
  rep.alpha_star = alpha_star;

  auto opts = cfg.fv_options();
  opts.t_end = bs.t_end;
  opts.observation_times.clear();
  const auto dirac = diffusion::InitialLaw::dirac(bs.dirac);
  const auto seeded = diffusion::InitialLaw::parse(output::format_number(bs.seed_weight) + "*uniform:0:2+" +
                                                   output::format_number(1.0 - bs.seed_weight) + "*dirac:" +
                                                   output::format_number(bs.dirac));
  const auto uniform = diffusion::InitialLaw::uniform(0.0, 2.0);

  for (double f : bs.alpha_factors) {
    auto sim = cfg.sim_config();
    sim.alpha = f * alpha_star;

    auto from_dirac = fleming_viot::run_fv(dirac, sim, opts);
    BasinRun d{"dirac", "nu2", f, sim.alpha, dirac.mass_d1(), from_dirac.stationary.mass_d1(), 0.0};
    d.tv = measure::tv_distance(from_dirac.stationary, binned_nu2(sim.alpha, cfg.spectral.n_cells, opts.grid));
    rep.runs.push_back(d);

    auto from_seed = fleming_viot::run_fv(seeded, sim, opts);
    auto reference = fleming_viot::run_fv(uniform, sim, opts);
    BasinRun s{"seeded", "uniform", f, sim.alpha, seeded.mass_d1(), from_seed.stationary.mass_d1(), 0.0};
    s.tv = measure::tv_distance(from_seed.stationary, reference.stationary);
    rep.runs.push_back(s);
  }
  return rep;
}

BasinReport basin_experiment(const config::RunConfig& cfg) {
  return basin_experiment(cfg, spectral::critical_alpha(cfg.spectral.n_cells).alpha_star);
}

std::vector<TimechangeRow> timechange_check(const config::RunConfig& cfg) {
  const auto& tc = cfg.timechange;
  std::vector<double> alphas{1.0};
  for (double a : tc.alphas)
    if (a != 1.0) alphas.push_back(a);

  std::vector<TimechangeRow> rows;
  const double spec_unit = spectral::solve(spectral::Interval::Right, 1.0, cfg.spectral.n_cells).lambda;
  for (double a : alphas) {
    double l = a == 1.0 ? spec_unit : spectral::solve(spectral::Interval::Right, a, cfg.spectral.n_cells).lambda;
    rows.push_back({"spectral", a, l, spec_unit, l / spec_unit, l / spec_unit / a - 1.0});
  }

  auto mc_lambda = [&](double a) {
    auto sim = cfg.sim_config();
    sim.alpha = a;
    sim.n_paths = tc.n_paths;
    sim.t_max = tc.horizon / a;
    auto times = diffusion::uniform_time_grid(sim.t_max, tc.grid_step / a);
    auto curve = diffusion::survival_curve(tc.x0, sim, times);
    return diffusion::lambda_from_survival(curve, diffusion::Component::D2Right).lambda;
  };
  const double mc_unit = mc_lambda(1.0);
  for (double a : alphas) {
    double l = a == 1.0 ? mc_unit : mc_lambda(a);
    rows.push_back({"monte_carlo", a, l, mc_unit, l / mc_unit, l / mc_unit / a - 1.0});
  }
  return rows;
}

}  // namespace qsdlab::experiments
