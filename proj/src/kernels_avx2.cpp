// AVX2 variant of advance_scalar. Each 64-bit lane carries one particle; the
// Philox words live in the low 32 bits of the lanes so that _mm256_mul_epu32
// yields the full 64-bit products.
//
// Only +, -, *, /, sqrt, round and bit operations are used, in the same order
// as the scalar reference, and FMA is not enabled, so the results match
// advance_scalar exactly.

#include "qsdlab/kernels.hpp"

#ifdef QSDLAB_HAVE_AVX2_KERNEL

#include <immintrin.h>

#include <cassert>
#include <cmath>

#include "qsdlab/rng.hpp"

#define QSDLAB_AVX2 __attribute__((target("avx2")))

namespace qsdlab::kernels {

namespace {

using rng::Philox4x32;
namespace fm = rng::fastmath;

QSDLAB_AVX2 inline __m256d bcast(double v) { return _mm256_set1_pd(v); }

QSDLAB_AVX2 inline __m256i bcast_u32(std::uint32_t v) {
  return _mm256_set1_epi64x(static_cast<long long>(v));
}

struct PhiloxKeys {
  __m256i k0[Philox4x32::kRounds];
  __m256i k1[Philox4x32::kRounds];
};

// Independent 4-lane blocks processed together; interleaving them hides the
// latency of the long Philox/log dependency chains.
constexpr int kBlocks = 2;

#pragma GCC diagnostic ignored "-Wignored-attributes"

template <class T>
using Lanes = T[kBlocks];

QSDLAB_AVX2 inline void philox(Lanes<__m256i>& c0, Lanes<__m256i>& c1, Lanes<__m256i>& c2,
                               Lanes<__m256i>& c3, const PhiloxKeys& keys) {
  const __m256i m0 = bcast_u32(Philox4x32::kMul0);
  const __m256i m1 = bcast_u32(Philox4x32::kMul1);
  const __m256i low = bcast_u32(0xFFFFFFFFu);
  for (int r = 0; r < Philox4x32::kRounds; ++r) {
    for (int b = 0; b < kBlocks; ++b) {
      const __m256i p0 = _mm256_mul_epu32(c0[b], m0);
      const __m256i p1 = _mm256_mul_epu32(c2[b], m1);
      const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), c1[b]), keys.k0[r]);
      const __m256i n1 = _mm256_and_si256(p1, low);
      const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), c3[b]), keys.k1[r]);
      const __m256i n3 = _mm256_and_si256(p0, low);
      c0[b] = n0;
      c1[b] = n1;
      c2[b] = n2;
      c3[b] = n3;
    }
  }
}

QSDLAB_AVX2 inline __m256d one_to_two(__m256i lo, __m256i hi) {
  const __m256i m = _mm256_and_si256(
      _mm256_or_si256(_mm256_slli_epi64(hi, 20), _mm256_srli_epi64(lo, 12)),
      _mm256_set1_epi64x(static_cast<long long>(rng::kMantissaMask)));
  return _mm256_castsi256_pd(_mm256_or_si256(m, _mm256_set1_epi64x(static_cast<long long>(rng::kOneBits))));
}

QSDLAB_AVX2 inline void log_positive(Lanes<__m256d>& v) {
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000ll);
  const __m256i mant = _mm256_set1_epi64x(static_cast<long long>(rng::kMantissaMask));
  const __m256i onebits = _mm256_set1_epi64x(static_cast<long long>(rng::kOneBits));
  Lanes<__m256d> e, f, s, hfsq;
  for (int b = 0; b < kBlocks; ++b) {
    const __m256i bits = _mm256_castpd_si256(v[b]);
    // Small non-negative integers convert exactly through the 2^52 trick.
    const __m256d ebiased = _mm256_sub_pd(
        _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(bits, 52), magic)), bcast(4503599627370496.0));
    e[b] = _mm256_sub_pd(ebiased, bcast(1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant), onebits));
    const __m256d big = _mm256_cmp_pd(m, bcast(fm::kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, bcast(0.5)), big);
    e[b] = _mm256_blendv_pd(e[b], _mm256_add_pd(e[b], bcast(1.0)), big);
    f[b] = _mm256_sub_pd(m, bcast(1.0));
    s[b] = _mm256_div_pd(f[b], _mm256_add_pd(bcast(2.0), f[b]));
    hfsq[b] = _mm256_mul_pd(_mm256_mul_pd(bcast(0.5), f[b]), f[b]);
  }
  for (int b = 0; b < kBlocks; ++b) {
    const __m256d z = _mm256_mul_pd(s[b], s[b]);
    const __m256d w = _mm256_mul_pd(z, z);
    const __m256d t1 = _mm256_mul_pd(
        w, _mm256_add_pd(bcast(fm::kLg2),
                         _mm256_mul_pd(w, _mm256_add_pd(bcast(fm::kLg4), _mm256_mul_pd(w, bcast(fm::kLg6))))));
    const __m256d t2 = _mm256_mul_pd(
        z, _mm256_add_pd(
               bcast(fm::kLg1),
               _mm256_mul_pd(w, _mm256_add_pd(bcast(fm::kLg3),
                                              _mm256_mul_pd(w, _mm256_add_pd(bcast(fm::kLg5),
                                                                             _mm256_mul_pd(w, bcast(fm::kLg7))))))));
    const __m256d r = _mm256_add_pd(t2, t1);
    const __m256d inner =
        _mm256_add_pd(_mm256_mul_pd(s[b], _mm256_add_pd(hfsq[b], r)), _mm256_mul_pd(e[b], bcast(fm::kLn2Lo)));
    v[b] = _mm256_sub_pd(_mm256_mul_pd(e[b], bcast(fm::kLn2Hi)),
                         _mm256_sub_pd(_mm256_sub_pd(hfsq[b], inner), f[b]));
  }
}

QSDLAB_AVX2 inline __m256d horner6(__m256d z, double c0, double c1, double c2, double c3, double c4,
                                   double c5) {
  __m256d p = _mm256_add_pd(_mm256_mul_pd(bcast(c0), z), bcast(c1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), bcast(c2));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), bcast(c3));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), bcast(c4));
  return _mm256_add_pd(_mm256_mul_pd(p, z), bcast(c5));
}

QSDLAB_AVX2 inline __m256d cos_two_pi(__m256d u) {
  const __m256d sign = bcast(-0.0);
  const __m256d nearest = _mm256_round_pd(u, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d y = _mm256_andnot_pd(sign, _mm256_sub_pd(u, nearest));
  const __m256d flip = _mm256_cmp_pd(y, bcast(0.25), _CMP_GT_OQ);
  y = _mm256_blendv_pd(y, _mm256_sub_pd(bcast(0.5), y), flip);
  const __m256d use_sin = _mm256_cmp_pd(y, bcast(0.125), _CMP_GT_OQ);
  const __m256d arg = _mm256_blendv_pd(_mm256_mul_pd(bcast(fm::kTwoPi), y),
                                       _mm256_mul_pd(bcast(fm::kTwoPi), _mm256_sub_pd(bcast(0.25), y)), use_sin);
  const __m256d z = _mm256_mul_pd(arg, arg);
  const __m256d ps = horner6(z, fm::kSin0, fm::kSin1, fm::kSin2, fm::kSin3, fm::kSin4, fm::kSin5);
  const __m256d vs = _mm256_add_pd(arg, _mm256_mul_pd(arg, _mm256_mul_pd(z, ps)));
  const __m256d pc = horner6(z, fm::kCos0, fm::kCos1, fm::kCos2, fm::kCos3, fm::kCos4, fm::kCos5);
  const __m256d vc = _mm256_add_pd(_mm256_sub_pd(bcast(1.0), _mm256_mul_pd(bcast(0.5), z)),
                                   _mm256_mul_pd(_mm256_mul_pd(z, z), pc));
  const __m256d v = _mm256_blendv_pd(vc, vs, use_sin);
  return _mm256_blendv_pd(v, _mm256_xor_pd(v, sign), flip);
}

// Both Box-Muller outputs for the block with counter `block`.
QSDLAB_AVX2 inline void normal_pairs(const Lanes<__m256i>& ids, std::uint64_t block, const PhiloxKeys& keys,
                                     Lanes<__m256d>& first, Lanes<__m256d>& second) {
  Lanes<__m256i> c0, c1, c2, c3;
  for (int b = 0; b < kBlocks; ++b) {
    c0[b] = bcast_u32(static_cast<std::uint32_t>(block));
    c1[b] = bcast_u32(static_cast<std::uint32_t>(block >> 32));
    c2[b] = ids[b];
    c3[b] = bcast_u32(static_cast<std::uint32_t>(rng::Domain::DiffusionNoise));
  }
  philox(c0, c1, c2, c3, keys);
  Lanes<__m256d> lg;
  for (int b = 0; b < kBlocks; ++b) lg[b] = _mm256_sub_pd(bcast(2.0), one_to_two(c0[b], c1[b]));
  log_positive(lg);
  for (int b = 0; b < kBlocks; ++b) {
    const __m256d u2 = _mm256_sub_pd(one_to_two(c2[b], c3[b]), bcast(1.0));
    const __m256d radius = _mm256_sqrt_pd(_mm256_mul_pd(bcast(-2.0), lg[b]));
    first[b] = _mm256_mul_pd(radius, cos_two_pi(u2));
    second[b] = _mm256_mul_pd(radius, cos_two_pi(_mm256_sub_pd(u2, bcast(0.25))));
  }
}

}  // namespace

QSDLAB_AVX2 void advance_avx2(std::span<double> positions, std::span<const std::uint32_t> ids,
                              std::span<Status> status, std::span<double> spare, const StepParams& params,
                              const NoiseKey& key) {
  assert(positions.size() == ids.size() && positions.size() == status.size());
  assert(spare.empty() || spare.size() == positions.size());
  const bool odd = (key.step & 1) != 0;
  const bool cached = !spare.empty();
  PhiloxKeys keys{};
  {
    std::uint32_t k0 = static_cast<std::uint32_t>(key.seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(key.seed >> 32);
    for (int r = 0; r < Philox4x32::kRounds; ++r) {
      if (r > 0) {
        k0 += Philox4x32::kWeyl0;
        k1 += Philox4x32::kWeyl1;
      }
      keys.k0[r] = bcast_u32(k0);
      keys.k1[r] = bcast_u32(k1);
    }
  }

  const double sqrt_alpha_s = std::sqrt(params.alpha);
  const double sqrt_dt_s = std::sqrt(params.dt);
  const __m256d alpha = bcast(params.alpha);
  const __m256d sqrt_alpha = bcast(sqrt_alpha_s);
  const __m256d dt = bcast(params.dt);
  const __m256d sqrt_dt = bcast(sqrt_dt_s);
  const __m256d one = bcast(1.0);
  const __m256d two = bcast(2.0);
  const __m256d three = bcast(3.0);
  const __m256d four = bcast(4.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d five = bcast(5.0);

  const std::size_t n = positions.size();
  constexpr std::size_t kWidth = 4 * kBlocks;
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    Lanes<__m256d> noise;
    if (odd && cached) {
      for (int b = 0; b < kBlocks; ++b) noise[b] = _mm256_loadu_pd(spare.data() + i + 4 * b);
    } else {
      Lanes<__m256i> lane_ids;
      for (int b = 0; b < kBlocks; ++b) {
        lane_ids[b] = _mm256_cvtepu32_epi64(
            _mm_loadu_si128(reinterpret_cast<const __m128i*>(ids.data() + i + 4 * b)));
      }
      Lanes<__m256d> second;
      normal_pairs(lane_ids, key.step >> 1, keys, noise, second);
      for (int b = 0; b < kBlocks; ++b) {
        if (odd) {
          noise[b] = second[b];
        } else if (cached) {
          _mm256_storeu_pd(spare.data() + i + 4 * b, second[b]);
        }
      }
    }

    for (int b = 0; b < kBlocks; ++b) {
      const std::size_t base = i + 4 * static_cast<std::size_t>(b);
      const __m256d x = _mm256_loadu_pd(positions.data() + base);
      const __m256d in_d1 = _mm256_cmp_pd(x, two, _CMP_LT_OQ);
      const __m256d transit = _mm256_andnot_pd(in_d1, _mm256_cmp_pd(x, three, _CMP_LT_OQ));
      const int transit_bits = _mm256_movemask_pd(transit);

      const __m256d drift = _mm256_blendv_pd(alpha, one, in_d1);
      const __m256d a = _mm256_sub_pd(two, x);
      const __m256d sig_d1 =
          _mm256_blendv_pd(_mm256_mul_pd(a, a), one, _mm256_cmp_pd(x, one, _CMP_LE_OQ));
      const __m256d c = _mm256_sub_pd(x, three);
      const __m256d sig_d2 = _mm256_blendv_pd(sqrt_alpha, _mm256_mul_pd(sqrt_alpha, _mm256_mul_pd(c, c)),
                                              _mm256_cmp_pd(x, four, _CMP_LT_OQ));
      const __m256d sig = _mm256_blendv_pd(sig_d2, sig_d1, in_d1);
      const __m256d next = _mm256_add_pd(_mm256_add_pd(x, _mm256_mul_pd(drift, dt)),
                                         _mm256_mul_pd(_mm256_mul_pd(sig, sqrt_dt), noise[b]));
      const __m256d low = _mm256_cmp_pd(next, zero, _CMP_LE_OQ);
      const __m256d high = _mm256_andnot_pd(low, _mm256_cmp_pd(next, five, _CMP_GE_OQ));
      __m256d settled = _mm256_blendv_pd(next, zero, low);
      settled = _mm256_blendv_pd(settled, five, high);

      if (transit_bits == 0) {
        _mm256_storeu_pd(positions.data() + base, settled);
      } else {
        alignas(32) double in[4];
        alignas(32) double out[4];
        _mm256_store_pd(in, x);
        _mm256_store_pd(out, settled);
        for (int l = 0; l < 4; ++l) {
          positions[base + l] =
              (transit_bits >> l) & 1 ? transit_advance(in[l], params.alpha, params.dt) : out[l];
        }
      }
      const int low_bits = _mm256_movemask_pd(low) & ~transit_bits;
      const int high_bits = _mm256_movemask_pd(high) & ~transit_bits;
      for (int l = 0; l < 4; ++l) {
        status[base + l] = (low_bits >> l) & 1    ? Status::AbsorbedAt0
                           : (high_bits >> l) & 1 ? Status::AbsorbedAt5
                                                  : Status::Alive;
      }
    }
  }
  if (i < n) {
    advance_scalar(positions.subspan(i), ids.subspan(i), status.subspan(i),
                   cached ? spare.subspan(i) : spare, params, key);
  }
}

}  // namespace qsdlab::kernels

#endif  // QSDLAB_HAVE_AVX2_KERNEL
