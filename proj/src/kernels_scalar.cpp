#include <cassert>
#include <cmath>
#include <cstdlib>
#include <string_view>

#include "qsdlab/kernels.hpp"
#include "qsdlab/model.hpp"
#include "qsdlab/rng.hpp"

namespace qsdlab::kernels {

double transit_advance(double x, double alpha, double dt) {
  const double t3 = model::transit_time_t3(x, alpha);
  if (t3 <= dt) return 3.0 + alpha * (dt - t3);
  return model::transit_flow(x, alpha, dt);
}

namespace {

// Euler-Maruyama increment for x outside [2,3). Mirrors model::drift and
// model::sigma term by term so both routes round identically.
inline double euler(double x, double alpha, double sqrt_alpha, double dt, double sqrt_dt,
                    double noise) {
  double drift;
  double sig;
  if (x < 2.0) {
    drift = 1.0;
    sig = x <= 1.0 ? 1.0 : (2.0 - x) * (2.0 - x);
  } else {
    drift = alpha;
    sig = x < 4.0 ? sqrt_alpha * ((x - 3.0) * (x - 3.0)) : sqrt_alpha;
  }
  return (x + drift * dt) + (sig * sqrt_dt) * noise;
}

inline StepOutcome settle(double next) {
  if (next <= model::kDomainLo) return {model::kDomainLo, Status::AbsorbedAt0};
  if (next >= model::kDomainHi) return {model::kDomainHi, Status::AbsorbedAt5};
  return {next, Status::Alive};
}

}  // namespace

StepOutcome step_position(double x, const StepParams& params, double noise) {
  if (x >= 2.0 && x < 3.0) return {transit_advance(x, params.alpha, params.dt), Status::Alive};
  return settle(euler(x, params.alpha, std::sqrt(params.alpha), params.dt, std::sqrt(params.dt),
                      noise));
}

void advance_scalar(std::span<double> positions, std::span<const std::uint32_t> ids,
                    std::span<Status> status, std::span<double> spare, const StepParams& params,
                    const NoiseKey& key) {
  assert(positions.size() == ids.size() && positions.size() == status.size());
  assert(spare.empty() || spare.size() == positions.size());
  const double sqrt_alpha = std::sqrt(params.alpha);
  const double sqrt_dt = std::sqrt(params.dt);
  const bool odd = (key.step & 1) != 0;
  const bool cached = !spare.empty();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    double noise = 0.0;
    if (odd) {
      noise = cached ? spare[i] : rng::diffusion_noise(key.seed, key.step, ids[i]);
    } else {
      const rng::NormalPair pair = rng::normal_pair_from_words(
          rng::philox_words({key.seed, key.step >> 1, ids[i], rng::Domain::DiffusionNoise}));
      noise = pair.first;
      if (cached) spare[i] = pair.second;
    }
    const double x = positions[i];
    if (x >= 2.0 && x < 3.0) {
      positions[i] = transit_advance(x, params.alpha, params.dt);
      status[i] = Status::Alive;
      continue;
    }
    const StepOutcome out = settle(euler(x, params.alpha, sqrt_alpha, params.dt, sqrt_dt, noise));
    positions[i] = out.position;
    status[i] = out.status;
  }
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(QSDLAB_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa selected_isa() {
  if (const char* forced = std::getenv("QSDLAB_SIMD")) {
    if (std::string_view(forced) == "scalar") return Isa::Scalar;
  }
  return cpu_supports(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

AdvanceFn advance_for(Isa isa) {
#ifdef QSDLAB_HAVE_AVX2_KERNEL
  if (isa == Isa::Avx2 && cpu_supports(Isa::Avx2)) return &advance_avx2;
#endif
  (void)isa;
  return &advance_scalar;
}

AdvanceFn advance() {
  static const AdvanceFn fn = advance_for(selected_isa());
  return fn;
}

}  // namespace qsdlab::kernels
