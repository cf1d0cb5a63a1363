#pragma once

// Fleming-Viot particle system: N copies of the absorbed diffusion; a
// particle killed during a step jumps onto a uniformly chosen particle that
// survived that step. Jumps are resolved in ascending particle index, the
// k-th jump of step s drawing from the Resampling domain with counter s and
// stream k. Particle i always uses noise stream i.

#include <cstdint>
#include <vector>

#include "qsdlab/diffusion.hpp"
#include "qsdlab/kernels.hpp"
#include "qsdlab/measure.hpp"

namespace qsdlab::fleming_viot {

using diffusion::InitialLaw;
using diffusion::SimConfig;

struct ResampleEvent {
  std::uint64_t step;
  std::uint32_t particle;
  std::uint32_t source;
  kernels::Status boundary;
};

struct ParticleEnsemble {
  std::vector<double> positions;
  std::vector<std::uint32_t> ids;
  std::vector<kernels::Status> status;
  std::vector<double> spare;
  std::uint64_t step = 0;
  double time = 0.0;
  std::uint64_t resample_count = 0;
  bool keep_log = false;
  std::vector<ResampleEvent> resample_log;

  // Throws UsageError for fewer than 2 particles or positions outside (0,5).
  static ParticleEnsemble from_positions(std::vector<double> positions);
  static ParticleEnsemble from_law(const InitialLaw& law, std::size_t n, std::uint64_t seed);
  std::size_t size() const { return positions.size(); }
};

// Advances every particle by one step, then relocates the killed ones.
// Returns the number of relocations. Throws ExtinctionError when every
// particle is killed in the same step.
std::size_t fv_step(ParticleEnsemble& ens, const SimConfig& cfg);

struct FvOptions {
  std::size_t n_particles = 10000;
  double t_end = 200.0;
  std::vector<double> observation_times;
  double stationary_fraction = 0.2;  // final share of steps averaged
  std::uint64_t stationary_stride = 10;
  double burn_in_fraction = 0.5;  // rate window is [burn_in t_end, t_end]
  double trace_interval = 0.1;
  measure::BinGrid grid;
  bool keep_log = false;

  void validate() const;
};

// Relocations per step, the raw data of the absorption-rate estimator.
struct AbsorptionHistory {
  double dt = 0.0;
  std::size_t n_particles = 0;
  std::vector<std::uint32_t> events_per_step;
};

// events in [t1, t2] / (N (t2 - t1)). Throws EstimationError on an empty
// window.
double lambda_from_absorptions(const AbsorptionHistory& history, double t1, double t2);

struct TracePoint {
  double t;
  double mass_d1;
  double resample_rate;  // relocations per particle per unit time since the last point
};

struct FvResult {
  std::vector<double> observation_times;
  std::vector<measure::EmpiricalMeasure> observations;
  measure::EmpiricalMeasure stationary;
  double rate_hat = 0.0;
  double rate_window_lo = 0.0;
  double rate_window_hi = 0.0;
  std::vector<TracePoint> trace;
  AbsorptionHistory absorptions;
  std::uint64_t resample_count = 0;
  std::vector<ResampleEvent> resample_log;
  std::vector<double> final_positions;
};

// Runs the system from law up to t_end. Times in observation_times are
// rounded to the nearest step.
FvResult run_fv(const InitialLaw& law, const SimConfig& cfg, const FvOptions& opts);

}  // namespace qsdlab::fleming_viot
