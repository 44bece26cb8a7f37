#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "si/simd/kernels.hpp"

using si::simd::KernelTable;

namespace {

std::vector<double> random_vec(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

std::vector<const KernelTable*> tables_under_test() {
  std::vector<const KernelTable*> out;
  for (const auto& name : si::simd::available_kernels()) out.push_back(&si::simd::kernels_named(name));
  return out;
}

}  // namespace

TEST_CASE("cos/sin match libm") {
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    for (auto [lo, hi, tol] : {std::tuple{-20.0, 20.0, 1e-14}, std::tuple{-1e4, 1e4, 1e-11}}) {
      auto x = random_vec(1003, lo, hi, 7);
      std::vector<double> c(x.size()), s(x.size());
      t->cos_sin(x.data(), c.data(), s.data(), x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        REQUIRE(std::abs(c[i] - std::cos(x[i])) <= tol);
        REQUIRE(std::abs(s[i] - std::sin(x[i])) <= tol);
      }
    }
  }
}

TEST_CASE("exp matches libm over full range") {
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    auto x = random_vec(2005, -700.0, 700.0, 11);
    x.push_back(0.0);
    x.push_back(-745.0);
    x.push_back(709.0);
    x.push_back(-0.5);
    auto y = x;
    t->exp_inplace(y.data(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ref = std::exp(x[i]);
      REQUIRE(std::abs(y[i] - ref) <= 1e-13 * ref + 1e-300);
    }
  }
}

TEST_CASE("combine3 and step match scalar reference") {
  const auto& ref = si::simd::kernels_named("scalar");
  auto x0 = random_vec(517, -3, 3, 1);
  auto x1 = random_vec(517, -3, 3, 2);
  auto z = random_vec(517, -3, 3, 3);
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    std::vector<double> a(517), b(517);
    ref.combine3(0.3, x0.data(), 0.7, x1.data(), 1.1, z.data(), a.data(), 517);
    t->combine3(0.3, x0.data(), 0.7, x1.data(), 1.1, z.data(), b.data(), 517);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == doctest::Approx(b[i]).epsilon(1e-15));

    auto xa = x0, xb = x0;
    ref.step_inplace(xa.data(), x1.data(), 0.01, z.data(), 0.2, 517);
    t->step_inplace(xb.data(), x1.data(), 0.01, z.data(), 0.2, 517);
    for (std::size_t i = 0; i < xa.size(); ++i) REQUIRE(xa[i] == doctest::Approx(xb[i]).epsilon(1e-15));
  }
}

TEST_CASE("dot and sumsq match pairwise reference") {
  auto a = random_vec(1531, -2, 2, 4);
  auto b = random_vec(1531, -2, 2, 5);
  long double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (long double)a[i] * b[i];
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    REQUIRE(t->dot(a.data(), b.data(), a.size()) == doctest::Approx((double)acc).epsilon(1e-12));
    REQUIRE(t->sumsq(a.data(), a.size()) == doctest::Approx(t->dot(a.data(), a.data(), a.size())).epsilon(1e-13));
  }
}

TEST_CASE("syrk_upper equals naive Phi^T Phi") {
  const std::size_t F = 37, rows = 29;
  auto phi = random_vec(F * rows, -1, 1, 6);
  std::vector<double> naive(F * F, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < F; ++i)
      for (std::size_t j = i; j < F; ++j) naive[i * F + j] += phi[r * F + i] * phi[r * F + j];
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    std::vector<double> g(F * F, 0.0);
    t->syrk_upper(g.data(), F, phi.data(), rows);
    for (std::size_t i = 0; i < F; ++i)
      for (std::size_t j = i; j < F; ++j)
        REQUIRE(g[i * F + j] == doctest::Approx(naive[i * F + j]).epsilon(1e-12));
  }
}

TEST_CASE("gemm_nn equals naive") {
  const std::size_t m = 13, n = 21, k = 17;
  auto a = random_vec(m * k, -1, 1, 8);
  auto b = random_vec(k * n, -1, 1, 9);
  std::vector<double> naive(m * n, 0.5);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t kk = 0; kk < k; ++kk) naive[i * n + j] += a[i * k + kk] * b[kk * n + j];
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    std::vector<double> c(m * n, 0.5);
    t->gemm_nn(c.data(), a.data(), b.data(), m, n, k);
    for (std::size_t i = 0; i < m * n; ++i) REQUIRE(c[i] == doctest::Approx(naive[i]).epsilon(1e-12));
  }
}

TEST_CASE("rank1_accum equals naive") {
  const std::size_t rows = 11, d = 3, F = 19;
  auto y = random_vec(rows * d, -1, 1, 10);
  auto phi = random_vec(rows * F, -1, 1, 12);
  std::vector<double> naive(d * F, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t f = 0; f < F; ++f) naive[c * F + f] += y[r * d + c] * phi[r * F + f];
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    std::vector<double> r1(d * F, 0.0);
    t->rank1_accum(r1.data(), y.data(), phi.data(), rows, d, F);
    for (std::size_t i = 0; i < d * F; ++i) REQUIRE(r1[i] == doctest::Approx(naive[i]).epsilon(1e-12));
  }
}

TEST_CASE("kde_sum equals naive gaussian kernel sum") {
  const std::size_t n = 203, k = 2;
  auto c0 = random_vec(n, -2, 2, 13);
  auto c1 = random_vec(n, -2, 2, 14);
  const double q[2] = {0.3, -0.7};
  const double w[2] = {0.8, 1.7};
  double naive = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double d0 = q[0] - c0[r], d1 = q[1] - c1[r];
    naive += std::exp(-(d0 * d0 * w[0] + d1 * d1 * w[1]));
  }
  const double* cols[2] = {c0.data(), c1.data()};
  for (const KernelTable* t : tables_under_test()) {
    CAPTURE(t->name);
    REQUIRE(t->kde_sum(cols, k, n, q, w) == doctest::Approx(naive).epsilon(1e-12));
  }
}
