#include "qsdlab/fleming_viot.hpp"

#include <algorithm>
#include <cmath>

#include "qsdlab/error.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/rng.hpp"

namespace qsdlab::fleming_viot {

using kernels::Status;

namespace {

// Particles per propagation task. Work splitting only affects speed.
constexpr std::size_t kChunk = 1 << 14;

void propagate(ParticleEnsemble& ens, const SimConfig& cfg) {
  const kernels::AdvanceFn advance = kernels::advance();
  const kernels::StepParams params = cfg.step_params();
  const kernels::NoiseKey key{cfg.seed, ens.step};
  const std::size_t n = ens.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  auto run = [&](std::size_t c) {
    const std::size_t lo = c * kChunk;
    const std::size_t len = std::min(kChunk, n - lo);
    advance(std::span(ens.positions).subspan(lo, len), std::span<const std::uint32_t>(ens.ids).subspan(lo, len),
            std::span(ens.status).subspan(lo, len), std::span(ens.spare).subspan(lo, len), params, key);
  };
  if (chunks == 1) {
    run(0);
  } else {
    parallel::for_each_index(chunks, run);
  }
}

}  // namespace

ParticleEnsemble ParticleEnsemble::from_positions(std::vector<double> positions) {
  if (positions.size() < 2) throw UsageError("Fleming-Viot needs at least 2 particles");
  if (positions.size() > 0xFFFFFFFFull) throw UsageError("too many particles");
  for (double x : positions) {
    if (!(x > model::kDomainLo && x < model::kDomainHi)) throw UsageError("particle outside (0,5)");
  }
  ParticleEnsemble e;
  const std::size_t n = positions.size();
  e.positions = std::move(positions);
  e.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.ids[i] = static_cast<std::uint32_t>(i);
  e.status.assign(n, Status::Alive);
  e.spare.assign(n, 0.0);
  return e;
}

ParticleEnsemble ParticleEnsemble::from_law(const InitialLaw& law, std::size_t n, std::uint64_t seed) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = law.sample(seed, i);
  return from_positions(std::move(xs));
}

std::size_t fv_step(ParticleEnsemble& ens, const SimConfig& cfg) {
  const std::size_t n = ens.size();
  if (n < 2) throw UsageError("Fleming-Viot needs at least 2 particles");
  propagate(ens, cfg);

  std::vector<std::uint32_t> survivors;
  std::size_t killed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ens.status[i] == Status::Alive) {
      survivors.push_back(static_cast<std::uint32_t>(i));
    } else {
      ++killed;
    }
  }
  if (killed > 0) {
    if (survivors.empty()) {
      throw ExtinctionError("every Fleming-Viot particle was killed in one step",
                            static_cast<long long>(ens.step));
    }
    std::uint32_t event = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (ens.status[i] == Status::Alive) continue;
      const std::uint64_t pick =
          rng::uniform_index({cfg.seed, ens.step, event, rng::Domain::Resampling}, survivors.size());
      const std::uint32_t source = survivors[pick];
      if (ens.keep_log) ens.resample_log.push_back({ens.step, static_cast<std::uint32_t>(i), source, ens.status[i]});
      ens.positions[i] = ens.positions[source];
      ens.status[i] = Status::Alive;
      ++event;
    }
    ens.resample_count += killed;
  }
  ++ens.step;
  ens.time = static_cast<double>(ens.step) * cfg.dt;
  return killed;
}

void FvOptions::validate() const {
  if (n_particles < 2) throw UsageError("n_particles must be at least 2");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw UsageError("t_end must be nonnegative");
  if (!(stationary_fraction > 0.0 && stationary_fraction <= 1.0)) {
    throw UsageError("stationary_fraction must lie in (0,1]");
  }
  if (stationary_stride < 1) throw UsageError("stationary_stride must be at least 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw UsageError("burn_in_fraction must lie in [0,1)");
  if (!(trace_interval > 0.0)) throw UsageError("trace_interval must be positive");
  for (double t : observation_times) {
    if (!(t >= 0.0 && t <= t_end + 1e-12)) throw UsageError("observation times must lie in [0, t_end]");
  }
  grid.validate();
}

double lambda_from_absorptions(const AbsorptionHistory& history, double t1, double t2) {
  if (!(t2 > t1) || history.n_particles == 0 || !(history.dt > 0.0)) {
    throw EstimationError("empty absorption window");
  }
  // Step s covers (s dt, (s+1) dt].
  const auto first = static_cast<std::size_t>(std::llround(t1 / history.dt));
  const auto last = std::min(history.events_per_step.size(), static_cast<std::size_t>(std::llround(t2 / history.dt)));
  if (last <= first) throw EstimationError("absorption window holds no steps");
  std::uint64_t events = 0;
  for (std::size_t s = first; s < last; ++s) events += history.events_per_step[s];
  const double span = static_cast<double>(last - first) * history.dt;
  return static_cast<double>(events) / (static_cast<double>(history.n_particles) * span);
}

FvResult run_fv(const InitialLaw& law, const SimConfig& cfg, const FvOptions& opts) {
  cfg.validate();
  opts.validate();
  ParticleEnsemble ens = ParticleEnsemble::from_law(law, opts.n_particles, cfg.seed);
  ens.keep_log = opts.keep_log;

  const std::uint64_t total_steps = cfg.steps(opts.t_end);
  const auto stationary_from = total_steps - static_cast<std::uint64_t>(
                                                 std::floor(opts.stationary_fraction * static_cast<double>(total_steps)));
  const std::uint64_t trace_stride = std::max<std::uint64_t>(1, cfg.steps(opts.trace_interval));

  std::vector<std::pair<std::uint64_t, std::size_t>> obs;
  for (std::size_t k = 0; k < opts.observation_times.size(); ++k) obs.push_back({cfg.steps(opts.observation_times[k]), k});
  std::sort(obs.begin(), obs.end());

  FvResult res;
  res.observation_times = opts.observation_times;
  res.observations.resize(obs.size());
  res.absorptions.dt = cfg.dt;
  res.absorptions.n_particles = opts.n_particles;
  res.absorptions.events_per_step.reserve(total_steps);

  measure::Histogram stationary(opts.grid);
  std::size_t next_obs = 0;
  std::uint64_t trace_events = 0;
  auto mass_d1 = [&] {
    std::size_t c = 0;
    for (double x : ens.positions) c += x < 2.0;
    return static_cast<double>(c) / static_cast<double>(ens.size());
  };
  res.trace.push_back({0.0, mass_d1(), 0.0});

  for (std::uint64_t s = 0;; ++s) {
    while (next_obs < obs.size() && obs[next_obs].first == s) {
      res.observations[obs[next_obs].second] = measure::EmpiricalMeasure::from_samples(ens.positions, opts.grid);
      ++next_obs;
    }
    if (s >= stationary_from && (s - stationary_from) % opts.stationary_stride == 0) {
      stationary.add_all(ens.positions);
    }
    if (s > 0 && s % trace_stride == 0) {
      const double span = static_cast<double>(trace_stride) * cfg.dt;
      res.trace.push_back({static_cast<double>(s) * cfg.dt, mass_d1(),
                           static_cast<double>(trace_events) / (static_cast<double>(ens.size()) * span)});
      trace_events = 0;
    }
    if (s == total_steps) break;
    const std::size_t killed = fv_step(ens, cfg);
    res.absorptions.events_per_step.push_back(static_cast<std::uint32_t>(killed));
    trace_events += killed;
  }

  res.stationary = stationary.measure();
  res.rate_window_lo = opts.burn_in_fraction * static_cast<double>(total_steps) * cfg.dt;
  res.rate_window_hi = static_cast<double>(total_steps) * cfg.dt;
  res.rate_hat = total_steps > 0 ? lambda_from_absorptions(res.absorptions, res.rate_window_lo, res.rate_window_hi)
                                 : 0.0;
  res.resample_count = ens.resample_count;
  res.resample_log = std::move(ens.resample_log);
  res.final_positions = std::move(ens.positions);
  return res;
}

}  // namespace qsdlab::fleming_viot
