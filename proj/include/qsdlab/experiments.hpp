#pragma once

// Composite experiments built from the engines: the bifurcation sweep over
// alpha, location of its critical point, basin-of-attraction runs and the
// time-change check.

#include <string>
#include <vector>

#include "qsdlab/config.hpp"
#include "qsdlab/measure.hpp"

namespace qsdlab::experiments {

inline constexpr double kCriticalThreshold = 0.03;

struct SweepResult {
  std::vector<double> alphas;
  std::vector<double> mass_d1;   // NaN where the ensemble went extinct
  std::vector<double> rate_hat;  // likewise
  std::vector<std::string> failures;  // one message per missing point, grid order
  double alpha_star_spectral = 0.0;
  double alpha_star_empirical = 0.0;  // NaN when mass_D1 never crosses the threshold
  double threshold = kCriticalThreshold;
  double lambda1 = 0.0;
  double lambda2_unit = 0.0;
};

// n geometrically spaced values from lo to hi inclusive.
std::vector<double> geometric_grid(double lo, double hi, int n);

// Sweep at a known critical alpha; the grid is [lo_factor, hi_factor] * alpha_star.
SweepResult bifurcation_sweep(const config::RunConfig& cfg, double alpha_star);
// Same, with alpha_star, lambda1 and lambda2(1) from the spectral oracle.
SweepResult bifurcation_sweep(const config::RunConfig& cfg);

// First upward crossing of `threshold` by mass (missing points skipped),
// linearly interpolated. Throws EstimationError when there is none.
double locate_critical(const std::vector<double>& alphas, const std::vector<double>& mass,
                       double threshold = kCriticalThreshold);
double locate_critical(const SweepResult& sweep);

// Largest |y - isotonic fit of y|, missing points skipped.
double isotonic_deviation(const std::vector<double>& y);

struct BasinRun {
  std::string start;      // "dirac" or "seeded"
  std::string reference;  // "nu2" or "uniform"
  double alpha_factor = 0.0;
  double alpha = 0.0;
  double mass_d1_initial = 0.0;
  double mass_d1_final = 0.0;
  double tv = 0.0;
};

struct BasinReport {
  double alpha_star = 0.0;
  std::vector<BasinRun> runs;
};

// For every alpha factor f, at alpha = f alpha_star: FV from the Dirac mass
// at basin.dirac compared with the binned spectral nu2, and FV from
// seed_weight Uniform(0,2) + (1 - seed_weight) Dirac compared with the FV
// stationary law from Uniform(0,2).
BasinReport basin_experiment(const config::RunConfig& cfg, double alpha_star);
BasinReport basin_experiment(const config::RunConfig& cfg);

struct TimechangeRow {
  std::string engine;  // "spectral" or "monte_carlo"
  double alpha = 0.0;
  double lambda = 0.0;
  double lambda_unit = 0.0;
  double ratio = 0.0;      // lambda / lambda_unit
  double deviation = 0.0;  // ratio / alpha - 1
};

// lambda2(alpha) / lambda2(1) from both engines for alpha = 1 and every
// timechange.alphas entry. The Monte Carlo rows start at timechange.x0 and
// rescale horizon and time grid by 1/alpha.
std::vector<TimechangeRow> timechange_check(const config::RunConfig& cfg);

// Spectral nu2 at alpha, binned on grid.
measure::EmpiricalMeasure binned_nu2(double alpha, int n_cells, measure::BinGrid grid = {});

}  // namespace qsdlab::experiments
