#pragma once

// Batched Euler-Maruyama propagation of many independent particles.
//
// The scalar kernel is the reference. The AVX2 kernel computes the same
// operation sequence on four lanes and must agree with it bit for bit; the
// dispatcher picks the widest variant the CPU supports at runtime.

#include <cstdint>
#include <span>
#include <string_view>

namespace qsdlab::kernels {

enum class Status : std::uint8_t { Alive = 0, AbsorbedAt0 = 1, AbsorbedAt5 = 2 };

struct StepParams {
  double alpha;
  double dt;
};

struct NoiseKey {
  std::uint64_t seed;
  std::uint64_t step;
};

// Advances positions[i] by one step of length params.dt with noise
// rng::diffusion_noise(key.seed, key.step, ids[i]). Writes the outcome to
// status[i]; absorbed particles are left at the boundary they crossed.
//
// `spare` is either empty or as long as `positions`. When present it caches
// the second Box-Muller output: even steps write it and odd steps read it, so
// consecutive even/odd calls must see the same particle order. The cache only
// saves work; results are identical with or without it.
using AdvanceFn = void (*)(std::span<double> positions, std::span<const std::uint32_t> ids,
                           std::span<Status> status, std::span<double> spare, const StepParams& params,
                           const NoiseKey& key);

void advance_scalar(std::span<double> positions, std::span<const std::uint32_t> ids,
                    std::span<Status> status, std::span<double> spare, const StepParams& params,
                    const NoiseKey& key);

#if defined(__x86_64__) || defined(_M_X64)
#define QSDLAB_HAVE_AVX2_KERNEL 1
void advance_avx2(std::span<double> positions, std::span<const std::uint32_t> ids,
                  std::span<Status> status, std::span<double> spare, const StepParams& params,
                  const NoiseKey& key);
#endif

enum class Isa { Scalar, Avx2 };

bool cpu_supports(Isa isa);
std::string_view isa_name(Isa isa);

// Widest supported variant, unless QSDLAB_SIMD=scalar forces the reference.
Isa selected_isa();
AdvanceFn advance_for(Isa isa);
AdvanceFn advance();

// Scalar single-particle step with the same semantics as the batched kernels.
// Transit positions in [2,3) follow the deterministic flow; a flow that
// reaches 3 inside the step continues with the drift alpha at 3 (sigma(3)=0).
struct StepOutcome {
  double position;
  Status status;
};
StepOutcome step_position(double x, const StepParams& params, double noise);

// Deterministic part of step_position for x in [2,3): the closed-form flow
// when 3 is not reached within dt, else 3 + alpha (dt - t3(x)).
double transit_advance(double x, double alpha, double dt);

}  // namespace qsdlab::kernels
