#pragma once

// Lane abstractions for the vector kernels. Each Pack is a fixed-width
// bundle of doubles with the operations the math routines and kernels
// need. The scalar pack is the reference semantics; the AVX2/NEON packs
// must agree with it within documented tolerances (see tests).

#include <cmath>
#include <cstdint>
#include <cstring>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace si::simd {

struct PackScalar {
  static constexpr int width = 1;
  double v;

  static PackScalar load(const double* p) { return {*p}; }
  static PackScalar set1(double x) { return {x}; }
  static PackScalar zero() { return {0.0}; }
  void store(double* p) const { *p = v; }

  friend PackScalar operator+(PackScalar a, PackScalar b) { return {a.v + b.v}; }
  friend PackScalar operator-(PackScalar a, PackScalar b) { return {a.v - b.v}; }
  friend PackScalar operator*(PackScalar a, PackScalar b) { return {a.v * b.v}; }

  // a*b + c
  static PackScalar fmadd(PackScalar a, PackScalar b, PackScalar c) { return {a.v * b.v + c.v}; }
  // c - a*b
  static PackScalar fnmadd(PackScalar a, PackScalar b, PackScalar c) { return {c.v - a.v * b.v}; }

  static PackScalar min(PackScalar a, PackScalar b) { return {a.v < b.v ? a.v : b.v}; }
  static PackScalar max(PackScalar a, PackScalar b) { return {a.v > b.v ? a.v : b.v}; }
  static PackScalar round_nearest(PackScalar a) { return {std::nearbyint(a.v)}; }
  static PackScalar floor(PackScalar a) { return {std::floor(a.v)}; }

  // All-bits masks from comparisons; bitwise select.
  static PackScalar cmp_eq(PackScalar a, PackScalar b) {
    std::uint64_t m = (a.v == b.v) ? ~0ull : 0ull;
    PackScalar r;
    std::memcpy(&r.v, &m, 8);
    return r;
  }
  static PackScalar cmp_ge(PackScalar a, PackScalar b) {
    std::uint64_t m = (a.v >= b.v) ? ~0ull : 0ull;
    PackScalar r;
    std::memcpy(&r.v, &m, 8);
    return r;
  }
  static PackScalar select(PackScalar mask, PackScalar a, PackScalar b) {
    std::uint64_t m, x, y, r;
    std::memcpy(&m, &mask.v, 8);
    std::memcpy(&x, &a.v, 8);
    std::memcpy(&y, &b.v, 8);
    r = (x & m) | (y & ~m);
    PackScalar out;
    std::memcpy(&out.v, &r, 8);
    return out;
  }
  static PackScalar bit_xor(PackScalar a, PackScalar b) {
    std::uint64_t x, y, r;
    std::memcpy(&x, &a.v, 8);
    std::memcpy(&y, &b.v, 8);
    r = x ^ y;
    PackScalar out;
    std::memcpy(&out.v, &r, 8);
    return out;
  }
  static PackScalar bit_and(PackScalar a, PackScalar b) {
    std::uint64_t x, y, r;
    std::memcpy(&x, &a.v, 8);
    std::memcpy(&y, &b.v, 8);
    r = x & y;
    PackScalar out;
    std::memcpy(&out.v, &r, 8);
    return out;
  }

  // x * 2^k for integer-valued k in [-2000, 2000]; exact, handles subnormals.
  static PackScalar scale_pow2(PackScalar x, PackScalar k) {
    return {std::ldexp(x.v, static_cast<int>(k.v))};
  }

  double hsum() const { return v; }
};

#if defined(__AVX2__) && defined(__FMA__)
struct PackAvx2 {
  static constexpr int width = 4;
  __m256d v;

  static PackAvx2 load(const double* p) { return {_mm256_loadu_pd(p)}; }
  static PackAvx2 set1(double x) { return {_mm256_set1_pd(x)}; }
  static PackAvx2 zero() { return {_mm256_setzero_pd()}; }
  void store(double* p) const { _mm256_storeu_pd(p, v); }

  friend PackAvx2 operator+(PackAvx2 a, PackAvx2 b) { return {_mm256_add_pd(a.v, b.v)}; }
  friend PackAvx2 operator-(PackAvx2 a, PackAvx2 b) { return {_mm256_sub_pd(a.v, b.v)}; }
  friend PackAvx2 operator*(PackAvx2 a, PackAvx2 b) { return {_mm256_mul_pd(a.v, b.v)}; }

  static PackAvx2 fmadd(PackAvx2 a, PackAvx2 b, PackAvx2 c) { return {_mm256_fmadd_pd(a.v, b.v, c.v)}; }
  static PackAvx2 fnmadd(PackAvx2 a, PackAvx2 b, PackAvx2 c) { return {_mm256_fnmadd_pd(a.v, b.v, c.v)}; }

  static PackAvx2 min(PackAvx2 a, PackAvx2 b) { return {_mm256_min_pd(a.v, b.v)}; }
  static PackAvx2 max(PackAvx2 a, PackAvx2 b) { return {_mm256_max_pd(a.v, b.v)}; }
  static PackAvx2 round_nearest(PackAvx2 a) {
    return {_mm256_round_pd(a.v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC)};
  }
  static PackAvx2 floor(PackAvx2 a) { return {_mm256_floor_pd(a.v)}; }

  static PackAvx2 cmp_eq(PackAvx2 a, PackAvx2 b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_EQ_OQ)}; }
  static PackAvx2 cmp_ge(PackAvx2 a, PackAvx2 b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_GE_OQ)}; }
  static PackAvx2 select(PackAvx2 mask, PackAvx2 a, PackAvx2 b) { return {_mm256_blendv_pd(b.v, a.v, mask.v)}; }
  static PackAvx2 bit_xor(PackAvx2 a, PackAvx2 b) { return {_mm256_xor_pd(a.v, b.v)}; }
  static PackAvx2 bit_and(PackAvx2 a, PackAvx2 b) { return {_mm256_and_pd(a.v, b.v)}; }

  static PackAvx2 scale_pow2(PackAvx2 x, PackAvx2 k) {
    // split k = k1 + k2 so each half stays in the normal exponent range
    __m256d half = _mm256_round_pd(_mm256_mul_pd(k.v, _mm256_set1_pd(0.5)), _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    __m256d rest = _mm256_sub_pd(k.v, half);
    auto pow2 = [](__m256d e) {
      __m128i e32 = _mm256_cvtpd_epi32(e);
      __m256i e64 = _mm256_cvtepi32_epi64(e32);
      __m256i bits = _mm256_add_epi64(_mm256_slli_epi64(e64, 52), _mm256_set1_epi64x(0x3ff0000000000000ll));
      return _mm256_castsi256_pd(bits);
    };
    __m256d r = _mm256_mul_pd(x.v, pow2(half));
    return {_mm256_mul_pd(r, pow2(rest))};
  }

  double hsum() const {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  }
};
#endif  // AVX2

#if defined(__aarch64__)
struct PackNeon {
  static constexpr int width = 2;
  float64x2_t v;

  static PackNeon load(const double* p) { return {vld1q_f64(p)}; }
  static PackNeon set1(double x) { return {vdupq_n_f64(x)}; }
  static PackNeon zero() { return {vdupq_n_f64(0.0)}; }
  void store(double* p) const { vst1q_f64(p, v); }

  friend PackNeon operator+(PackNeon a, PackNeon b) { return {vaddq_f64(a.v, b.v)}; }
  friend PackNeon operator-(PackNeon a, PackNeon b) { return {vsubq_f64(a.v, b.v)}; }
  friend PackNeon operator*(PackNeon a, PackNeon b) { return {vmulq_f64(a.v, b.v)}; }

  static PackNeon fmadd(PackNeon a, PackNeon b, PackNeon c) { return {vfmaq_f64(c.v, a.v, b.v)}; }
  static PackNeon fnmadd(PackNeon a, PackNeon b, PackNeon c) { return {vfmsq_f64(c.v, a.v, b.v)}; }

  static PackNeon min(PackNeon a, PackNeon b) { return {vminq_f64(a.v, b.v)}; }
  static PackNeon max(PackNeon a, PackNeon b) { return {vmaxq_f64(a.v, b.v)}; }
  static PackNeon round_nearest(PackNeon a) { return {vrndnq_f64(a.v)}; }
  static PackNeon floor(PackNeon a) { return {vrndmq_f64(a.v)}; }

  static PackNeon cmp_eq(PackNeon a, PackNeon b) {
    return {vreinterpretq_f64_u64(vceqq_f64(a.v, b.v))};
  }
  static PackNeon cmp_ge(PackNeon a, PackNeon b) {
    return {vreinterpretq_f64_u64(vcgeq_f64(a.v, b.v))};
  }
  static PackNeon select(PackNeon mask, PackNeon a, PackNeon b) {
    return {vbslq_f64(vreinterpretq_u64_f64(mask.v), a.v, b.v)};
  }
  static PackNeon bit_xor(PackNeon a, PackNeon b) {
    return {vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(a.v), vreinterpretq_u64_f64(b.v)))};
  }
  static PackNeon bit_and(PackNeon a, PackNeon b) {
    return {vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(a.v), vreinterpretq_u64_f64(b.v)))};
  }

  static PackNeon scale_pow2(PackNeon x, PackNeon k) {
    float64x2_t half = vrndmq_f64(vmulq_n_f64(k.v, 0.5));
    float64x2_t rest = vsubq_f64(k.v, half);
    auto pow2 = [](float64x2_t e) {
      int64x2_t e64 = vcvtq_s64_f64(e);
      int64x2_t bits = vaddq_s64(vshlq_n_s64(e64, 52), vdupq_n_s64(0x3ff0000000000000ll));
      return vreinterpretq_f64_s64(bits);
    };
    float64x2_t r = vmulq_f64(x.v, pow2(half));
    return {vmulq_f64(r, pow2(rest))};
  }

  double hsum() const { return vaddvq_f64(v); }
};
#endif  // aarch64

}  // namespace si::simd
