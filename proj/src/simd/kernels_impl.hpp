#pragma once

// Shared kernel bodies, templated over the lane pack. Each ISA translation
// unit instantiates make_table<P>() with its pack type.

#include <cstddef>

#include "si/simd/kernels.hpp"
#include "si/simd/vmath.hpp"

namespace si::simd::impl {

template <class P>
void combine3(double a, const double* x0, double b, const double* x1, double g, const double* z,
              double* out, std::size_t n) {
  const P pa = P::set1(a), pb = P::set1(b), pg = P::set1(g);
  std::size_t i = 0;
  for (; i + P::width <= n; i += P::width) {
    P acc = pa * P::load(x0 + i);
    acc = P::fmadd(pb, P::load(x1 + i), acc);
    acc = P::fmadd(pg, P::load(z + i), acc);
    acc.store(out + i);
  }
  for (; i < n; ++i) out[i] = a * x0[i] + b * x1[i] + g * z[i];
}

template <class P>
void step_inplace(double* x, const double* drift, double dt, const double* noise, double sig,
                  std::size_t n) {
  const P pdt = P::set1(dt), psig = P::set1(sig);
  std::size_t i = 0;
  if (noise) {
    for (; i + P::width <= n; i += P::width) {
      P acc = P::fmadd(pdt, P::load(drift + i), P::load(x + i));
      acc = P::fmadd(psig, P::load(noise + i), acc);
      acc.store(x + i);
    }
    for (; i < n; ++i) x[i] += dt * drift[i] + sig * noise[i];
  } else {
    for (; i + P::width <= n; i += P::width) {
      P acc = P::fmadd(pdt, P::load(drift + i), P::load(x + i));
      acc.store(x + i);
    }
    for (; i < n; ++i) x[i] += dt * drift[i];
  }
}

template <class P>
double dot(const double* a, const double* b, std::size_t n) {
  P acc0 = P::zero(), acc1 = P::zero();
  std::size_t i = 0;
  for (; i + 2 * P::width <= n; i += 2 * P::width) {
    acc0 = P::fmadd(P::load(a + i), P::load(b + i), acc0);
    acc1 = P::fmadd(P::load(a + i + P::width), P::load(b + i + P::width), acc1);
  }
  for (; i + P::width <= n; i += P::width) acc0 = P::fmadd(P::load(a + i), P::load(b + i), acc0);
  double s = (acc0 + acc1).hsum();
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class P>
double sumsq(const double* a, std::size_t n) {
  return dot<P>(a, a, n);
}

template <class P>
void cos_sin(const double* x, double* c, double* s, std::size_t n) {
  std::size_t i = 0;
  for (; i + P::width <= n; i += P::width) {
    P ps, pc;
    sincos(P::load(x + i), ps, pc);
    pc.store(c + i);
    if (s) ps.store(s + i);
  }
  for (; i < n; ++i) {
    PackScalar ps, pc;
    sincos(PackScalar{x[i]}, ps, pc);
    c[i] = pc.v;
    if (s) s[i] = ps.v;
  }
}

template <class P>
void exp_inplace(double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + P::width <= n; i += P::width) exp(P::load(x + i)).store(x + i);
  for (; i < n; ++i) x[i] = exp(PackScalar{x[i]}).v;
}

template <class P>
void syrk_upper(double* G, std::size_t F, const double* phi, std::size_t rows) {
  constexpr std::size_t W = P::width;
  constexpr std::size_t TJ = 2 * W;
  const std::size_t ntiles = (F + TJ - 1) / TJ;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t tile = 0; tile < ntiles; ++tile) {
    const std::size_t jp = tile * TJ;
    const std::size_t iend = F < jp + TJ ? F : jp + TJ;
    if (jp + TJ <= F) {
      std::size_t i = 0;
      for (; i + 2 <= iend; i += 2) {
        P a00 = P::zero(), a01 = P::zero(), a10 = P::zero(), a11 = P::zero();
        const double* pr = phi;
        for (std::size_t r = 0; r < rows; ++r, pr += F) {
          const P c0 = P::set1(pr[i]);
          const P c1 = P::set1(pr[i + 1]);
          const P b0 = P::load(pr + jp);
          const P b1 = P::load(pr + jp + W);
          a00 = P::fmadd(c0, b0, a00);
          a01 = P::fmadd(c0, b1, a01);
          a10 = P::fmadd(c1, b0, a10);
          a11 = P::fmadd(c1, b1, a11);
        }
        double* g0 = G + i * F + jp;
        double* g1 = G + (i + 1) * F + jp;
        (P::load(g0) + a00).store(g0);
        (P::load(g0 + W) + a01).store(g0 + W);
        (P::load(g1) + a10).store(g1);
        (P::load(g1 + W) + a11).store(g1 + W);
      }
      if (i < iend) {
        P a0 = P::zero(), a1 = P::zero();
        const double* pr = phi;
        for (std::size_t r = 0; r < rows; ++r, pr += F) {
          const P c0 = P::set1(pr[i]);
          a0 = P::fmadd(c0, P::load(pr + jp), a0);
          a1 = P::fmadd(c0, P::load(pr + jp + W), a1);
        }
        double* g0 = G + i * F + jp;
        (P::load(g0) + a0).store(g0);
        (P::load(g0 + W) + a1).store(g0 + W);
      }
    } else {
      // ragged last tile
      for (std::size_t i = 0; i < iend; ++i) {
        for (std::size_t j = (i > jp ? i : jp); j < F; ++j) {
          double acc = 0.0;
          const double* pr = phi;
          for (std::size_t r = 0; r < rows; ++r, pr += F) acc += pr[i] * pr[j];
          G[i * F + j] += acc;
        }
      }
    }
  }
}

template <class P>
void gemm_nn(double* C, const double* A, const double* B, std::size_t m, std::size_t n,
             std::size_t k) {
  constexpr std::size_t W = P::width;
  constexpr std::size_t TJ = 2 * W;
  std::size_t jp = 0;
  for (; jp + TJ <= n; jp += TJ) {
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
      double* c0 = C + i * n + jp;
      double* c1 = C + (i + 1) * n + jp;
      P a00 = P::load(c0), a01 = P::load(c0 + W);
      P a10 = P::load(c1), a11 = P::load(c1 + W);
      const double* ar0 = A + i * k;
      const double* ar1 = ar0 + k;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const P b0 = P::load(B + kk * n + jp);
        const P b1 = P::load(B + kk * n + jp + W);
        const P x0 = P::set1(ar0[kk]);
        const P x1 = P::set1(ar1[kk]);
        a00 = P::fmadd(x0, b0, a00);
        a01 = P::fmadd(x0, b1, a01);
        a10 = P::fmadd(x1, b0, a10);
        a11 = P::fmadd(x1, b1, a11);
      }
      a00.store(c0);
      a01.store(c0 + W);
      a10.store(c1);
      a11.store(c1 + W);
    }
    if (i < m) {
      double* c0 = C + i * n + jp;
      P a0 = P::load(c0), a1 = P::load(c0 + W);
      const double* ar0 = A + i * k;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const P x0 = P::set1(ar0[kk]);
        a0 = P::fmadd(x0, P::load(B + kk * n + jp), a0);
        a1 = P::fmadd(x0, P::load(B + kk * n + jp + W), a1);
      }
      a0.store(c0);
      a1.store(c0 + W);
    }
  }
  if (jp < n) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* ar = A + i * k;
      for (std::size_t j = jp; j < n; ++j) {
        double acc = C[i * n + j];
        for (std::size_t kk = 0; kk < k; ++kk) acc += ar[kk] * B[kk * n + j];
        C[i * n + j] = acc;
      }
    }
  }
}

template <class P>
void rank1_accum(double* R, const double* Y, const double* phi, std::size_t rows, std::size_t d,
                 std::size_t F) {
  constexpr std::size_t W = P::width;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* pr = phi + r * F;
    for (std::size_t c = 0; c < d; ++c) {
      const double yc = Y[r * d + c];
      if (yc == 0.0) continue;
      const P py = P::set1(yc);
      double* row = R + c * F;
      std::size_t f = 0;
      for (; f + W <= F; f += W) (P::fmadd(py, P::load(pr + f), P::load(row + f))).store(row + f);
      for (; f < F; ++f) row[f] += yc * pr[f];
    }
  }
}

template <class P>
double kde_sum(const double* const* cols, std::size_t k, std::size_t n, const double* q,
               const double* w) {
  constexpr std::size_t W = P::width;
  P acc = P::zero();
  std::size_t r = 0;
  for (; r + W <= n; r += W) {
    P d2 = P::zero();
    for (std::size_t j = 0; j < k; ++j) {
      const P diff = P::load(cols[j] + r) - P::set1(q[j]);
      d2 = P::fmadd(diff * diff, P::set1(w[j]), d2);
    }
    acc = acc + exp(P::zero() - d2);
  }
  double s = acc.hsum();
  for (; r < n; ++r) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double diff = cols[j][r] - q[j];
      d2 += diff * diff * w[j];
    }
    s += exp(PackScalar{-d2}).v;
  }
  return s;
}

template <class P>
KernelTable make_table(const char* name) {
  KernelTable t;
  t.name = name;
  t.combine3 = &combine3<P>;
  t.step_inplace = &step_inplace<P>;
  t.dot = &dot<P>;
  t.sumsq = &sumsq<P>;
  t.cos_sin = &cos_sin<P>;
  t.exp_inplace = &exp_inplace<P>;
  t.syrk_upper = &syrk_upper<P>;
  t.gemm_nn = &gemm_nn<P>;
  t.rank1_accum = &rank1_accum<P>;
  t.kde_sum = &kde_sum<P>;
  return t;
}

}  // namespace si::simd::impl
