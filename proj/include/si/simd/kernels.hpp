#pragma once

// Runtime-dispatched vector kernels for the hot inner loops. Every entry
// has a scalar reference implementation and ISA variants instantiated
// from the same templates; the dispatch picks the widest supported ISA
// at startup (override with env SI_SIMD=scalar|avx2|neon).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace si::simd {

struct KernelTable {
  const char* name;

  // out[i] = a*x0[i] + b*x1[i] + g*z[i]
  void (*combine3)(double a, const double* x0, double b, const double* x1, double g,
                   const double* z, double* out, std::size_t n);
  // x[i] += dt*drift[i] + sig*noise[i]; noise may be null
  void (*step_inplace)(double* x, const double* drift, double dt, const double* noise,
                       double sig, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  // c[i] = cos(x[i]); if s != null also s[i] = sin(x[i])
  void (*cos_sin)(const double* x, double* c, double* s, std::size_t n);
  void (*exp_inplace)(double* x, std::size_t n);
  // G (F x F row-major, upper triangle valid) += Phi^T Phi; Phi is rows x F row-major.
  // Keep rows modest (<= a few hundred) per call so the block stays cached.
  void (*syrk_upper)(double* G, std::size_t F, const double* phi, std::size_t rows);
  // C (m x n) += A (m x k) * B (k x n), all row-major and densely packed
  void (*gemm_nn)(double* C, const double* A, const double* B, std::size_t m, std::size_t n,
                  std::size_t k);
  // R (d x F) += sum_r Y[r,:] (outer) phi[r,:]
  void (*rank1_accum)(double* R, const double* Y, const double* phi, std::size_t rows,
                      std::size_t d, std::size_t F);
  // sum_r exp( - sum_j w[j] * (q[j] - cols[j][r])^2 )
  double (*kde_sum)(const double* const* cols, std::size_t k, std::size_t n, const double* q,
                    const double* w);
};

const KernelTable& kernels();
const KernelTable& kernels_named(std::string_view name);  // throws on unknown
void select_kernels(std::string_view name);               // "auto" re-detects
std::vector<std::string> available_kernels();

}  // namespace si::simd
