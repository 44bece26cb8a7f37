#pragma once

// Branchless sin/cos/exp over a Pack, Cephes-style polynomials after
// range reduction. Accuracy: ~1 ulp on the reduced interval; absolute
// error grows like |x|*1e-16 for large arguments (callers keep phases
// below ~1e8). The scalar kernels route through the same code so the
// dispatched variants differ only by lane width and fma contraction.

#include "si/simd/pack.hpp"

namespace si::simd {

namespace detail {
// pi/2 in three parts, high bits exact in double
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Md = 6.07710050650619224932e-11;
constexpr double kPio2Lo = 2.02226624879595063154e-21;
constexpr double kTwoOverPi = 6.36619772367581343076e-01;

constexpr double kSinCoef[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                                2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                                8.33333333332211858878e-3,  -1.66666666666666307295e-1};
constexpr double kCosCoef[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                                -2.75573141792967388112e-7,  2.48015872888517179954e-5,
                                -1.38888888888730564116e-3,  4.16666666666665929218e-2};

constexpr double kLog2E = 1.44269504088896340736e+00;
constexpr double kExpC1 = 6.93145751953125e-1;
constexpr double kExpC2 = 1.42860682030941723212e-6;
constexpr double kExpP[3] = {1.26177193074810590878e-4, 3.02994407707441961300e-2,
                             9.99999999999999999910e-1};
constexpr double kExpQ[4] = {3.00198505138664455042e-6, 2.52448340349684104192e-3,
                             2.27265548208155028766e-1, 2.00000000000000000005e0};
}  // namespace detail

template <class P>
inline void sincos(P x, P& s_out, P& c_out) {
  using namespace detail;
  P j = P::round_nearest(x * P::set1(kTwoOverPi));
  P xr = P::fnmadd(j, P::set1(kPio2Hi), x);
  xr = P::fnmadd(j, P::set1(kPio2Md), xr);
  xr = P::fnmadd(j, P::set1(kPio2Lo), xr);

  P z = xr * xr;
  P ps = P::set1(kSinCoef[0]);
  for (int i = 1; i < 6; ++i) ps = P::fmadd(ps, z, P::set1(kSinCoef[i]));
  P sin_r = P::fmadd(ps * z, xr, xr);

  P pc = P::set1(kCosCoef[0]);
  for (int i = 1; i < 6; ++i) pc = P::fmadd(pc, z, P::set1(kCosCoef[i]));
  P cos_r = P::fmadd(pc * z, z, P::fnmadd(z, P::set1(0.5), P::set1(1.0)));

  // quadrant jm4 = j mod 4 in {0,1,2,3}
  P jm4 = P::fnmadd(P::floor(j * P::set1(0.25)), P::set1(4.0), j);
  P odd = P::bit_xor(P::cmp_eq(jm4, P::set1(1.0)), P::cmp_eq(jm4, P::set1(3.0)));
  P ge2 = P::cmp_ge(jm4, P::set1(2.0));
  P is1or2 = P::bit_xor(P::cmp_eq(jm4, P::set1(1.0)), P::cmp_eq(jm4, P::set1(2.0)));

  P signbit = P::set1(-0.0);
  P s = P::select(odd, cos_r, sin_r);
  s = P::bit_xor(s, P::bit_and(ge2, signbit));
  P c = P::select(odd, sin_r, cos_r);
  c = P::bit_xor(c, P::bit_and(is1or2, signbit));
  s_out = s;
  c_out = c;
}

// Packs do not expose '/'; one hardware divide per pack.
template <class P>
inline P reciprocal(P denom);

template <>
inline PackScalar reciprocal<PackScalar>(PackScalar d) {
  return {1.0 / d.v};
}

#if defined(__AVX2__) && defined(__FMA__)
template <>
inline PackAvx2 reciprocal<PackAvx2>(PackAvx2 d) {
  return {_mm256_div_pd(_mm256_set1_pd(1.0), d.v)};
}
#endif
#if defined(__aarch64__)
template <>
inline PackNeon reciprocal<PackNeon>(PackNeon d) {
  return {vdivq_f64(vdupq_n_f64(1.0), d.v)};
}
#endif

template <class P>
inline P exp(P x) {
  using namespace detail;
  x = P::min(x, P::set1(709.0));
  x = P::max(x, P::set1(-745.0));
  P k = P::round_nearest(x * P::set1(kLog2E));
  P xr = P::fnmadd(k, P::set1(kExpC1), x);
  xr = P::fnmadd(k, P::set1(kExpC2), xr);

  P z = xr * xr;
  P px = P::fmadd(P::set1(kExpP[0]), z, P::set1(kExpP[1]));
  px = P::fmadd(px, z, P::set1(kExpP[2]));
  px = px * xr;
  P qx = P::fmadd(P::set1(kExpQ[0]), z, P::set1(kExpQ[1]));
  qx = P::fmadd(qx, z, P::set1(kExpQ[2]));
  qx = P::fmadd(qx, z, P::set1(kExpQ[3]));

  // e^xr = 1 + 2 px / (qx - px)
  P denom = qx - px;
  P frac = (px + px) * reciprocal(denom);
  P e = frac + P::set1(1.0);
  return P::scale_pow2(e, k);
}

}  // namespace si::simd
