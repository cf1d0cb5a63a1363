#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, counter, stream, domain), so results do not depend on how work is
// split across threads or SIMD lanes.
//
// The transcendental helpers below are written with +, *, /, sqrt and bit
// operations only. The AVX2 kernels replay exactly the same operation
// sequence, which makes scalar and vector paths bit-identical.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace qsdlab::rng {

// Philox4x32-10 (Salmon et al., SC'11).
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  static constexpr int kRounds = 10;

  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter c, Key k) noexcept {
    for (int r = 0; r < kRounds; ++r) {
      if (r > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
  }
};

// Independent draw families sharing one seed.
enum class Domain : std::uint32_t {
  DiffusionNoise = 0,
  InitialLaw = 1,
  Resampling = 2,
  Auxiliary = 3,
};

struct Draw {
  std::uint64_t seed;
  std::uint64_t counter;
  std::uint32_t stream;
  Domain domain;
};

inline Philox4x32::Counter philox_words(const Draw& d) noexcept {
  return Philox4x32::generate(
      {static_cast<std::uint32_t>(d.counter), static_cast<std::uint32_t>(d.counter >> 32), d.stream,
       static_cast<std::uint32_t>(d.domain)},
      {static_cast<std::uint32_t>(d.seed), static_cast<std::uint32_t>(d.seed >> 32)});
}

inline constexpr std::uint64_t kMantissaMask = (std::uint64_t{1} << 52) - 1;
inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ull;

// 52 random mantissa bits from two words, as a double in [1,2).
inline double one_to_two(std::uint32_t lo, std::uint32_t hi) noexcept {
  const std::uint64_t m = ((std::uint64_t{hi} << 20) | (lo >> 12)) & kMantissaMask;
  return std::bit_cast<double>(kOneBits | m);
}

namespace fastmath {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;

// Natural log for normal positive doubles (fdlibm reduction and polynomial).
inline double log_positive(double v) noexcept {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  double e = static_cast<double>(static_cast<std::int64_t>(bits >> 52)) - 1023.0;
  double m = std::bit_cast<double>((bits & kMantissaMask) | kOneBits);
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double r = t2 + t1;
  const double hfsq = 0.5 * f * f;
  return e * kLn2Hi - ((hfsq - (s * (hfsq + r) + e * kLn2Lo)) - f);
}

inline constexpr double kTwoPi = 6.28318530717958647693;
inline constexpr double kSin0 = 1.58962301576546568060e-10;
inline constexpr double kSin1 = -2.50507477628578072866e-8;
inline constexpr double kSin2 = 2.75573136213857245213e-6;
inline constexpr double kSin3 = -1.98412698295895385996e-4;
inline constexpr double kSin4 = 8.33333333332211858878e-3;
inline constexpr double kSin5 = -1.66666666666666307295e-1;
inline constexpr double kCos0 = -1.13585365213876817300e-11;
inline constexpr double kCos1 = 2.08757008419747316778e-9;
inline constexpr double kCos2 = -2.75573141792967388112e-7;
inline constexpr double kCos3 = 2.48015872888517045348e-5;
inline constexpr double kCos4 = -1.38888888888730564116e-3;
inline constexpr double kCos5 = 4.16666666666665929218e-2;

// sin and cos on [0, pi/4] (Cephes minimax coefficients).
inline double sin_reduced(double x) noexcept {
  const double z = x * x;
  const double p = ((((kSin0 * z + kSin1) * z + kSin2) * z + kSin3) * z + kSin4) * z + kSin5;
  return x + x * (z * p);
}

inline double cos_reduced(double x) noexcept {
  const double z = x * x;
  const double p = ((((kCos0 * z + kCos1) * z + kCos2) * z + kCos3) * z + kCos4) * z + kCos5;
  return (1.0 - 0.5 * z) + (z * z) * p;
}

// cos(2 pi u) for u in [-1,1]. The reduction steps are exact.
inline double cos_two_pi(double u) noexcept {
  double y = std::abs(u - std::nearbyint(u));  // [0, 0.5]
  const bool flip = y > 0.25;
  if (flip) y = 0.5 - y;  // [0, 0.25]
  const bool use_sin = y > 0.125;
  const double arg = use_sin ? kTwoPi * (0.25 - y) : kTwoPi * y;
  const double v = use_sin ? sin_reduced(arg) : cos_reduced(arg);
  return flip ? -v : v;
}

}  // namespace fastmath

// Box-Muller pair from one Philox block: u1 in (0,1], u2 in [0,1).
// first = r cos(2 pi u2), second = r sin(2 pi u2) = r cos(2 pi (u2 - 1/4)).
struct NormalPair {
  double first;
  double second;
};

inline NormalPair normal_pair_from_words(const Philox4x32::Counter& w) noexcept {
  const double u1 = 2.0 - one_to_two(w[0], w[1]);
  const double u2 = one_to_two(w[2], w[3]) - 1.0;
  const double radius = std::sqrt(-2.0 * fastmath::log_positive(u1));
  return {radius * fastmath::cos_two_pi(u2), radius * fastmath::cos_two_pi(u2 - 0.25)};
}

inline double standard_normal(const Draw& d) noexcept {
  return normal_pair_from_words(philox_words(d)).first;
}

// Noise of particle `stream` at time step `step`. Steps 2k and 2k+1 share the
// Philox block with counter k and take its two Box-Muller outputs.
inline double diffusion_noise(std::uint64_t seed, std::uint64_t step, std::uint32_t stream) noexcept {
  const NormalPair p = normal_pair_from_words(philox_words({seed, step >> 1, stream, Domain::DiffusionNoise}));
  return (step & 1) ? p.second : p.first;
}

// Uniform on [0,1).
inline double uniform01(const Draw& d) noexcept {
  const auto w = philox_words(d);
  return one_to_two(w[0], w[1]) - 1.0;
}

// Uniform integer in [0, n) via 64x64 multiply-high; n must be positive.
inline std::uint64_t uniform_index(const Draw& d, std::uint64_t n) noexcept {
  const auto w = philox_words(d);
  const std::uint64_t r = (std::uint64_t{w[1]} << 32) | w[0];
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(r) * n) >> 64);
}

}  // namespace qsdlab::rng
