#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "si/errors.hpp"
#include "si/interpolant.hpp"

using namespace si;

namespace {
Coupling gaussian_pair(int d, double mean1) {
  auto g0 = std::make_shared<MixtureSampler>(GaussianMixture::standard(d));
  auto g1 = std::make_shared<MixtureSampler>(
      GaussianMixture::single(Vec::Constant(d, mean1), SquareMat::Identity(d, d)));
  return Coupling::independent(g0, g1);
}
}  // namespace

TEST_CASE("boundary exactness at t=0 and t=1") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto cpl = gaussian_pair(3, 2.0);
  auto b0 = draw_batch(sched, cpl, 500, TimeSpec::fixed(0.0), false, 7);
  REQUIRE(oracle::bit_equal(b0.xt, b0.x0));
  auto b1 = draw_batch(sched, cpl, 500, TimeSpec::fixed(1.0), false, 7);
  REQUIRE(oracle::bit_equal(b1.xt, b1.x1));
}

TEST_CASE("latent variance at the midpoint for point-mass endpoints") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto p0 = std::make_shared<PointMassSampler>(Vec::Zero(2));
  auto cpl = Coupling::independent(p0, p0);
  const std::size_t n = 100000;
  auto b = draw_batch(sched, cpl, n, TimeSpec::fixed(0.5), false, 11);
  // xt = gamma(1/2) z, per-coordinate variance = 0.25
  for (int c = 0; c < 2; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = b.xt(i, c);
    auto mv = oracle::mean_var(col);
    CHECK(std::abs(mv.mean) < 4 * std::sqrt(0.25 / n));
    CHECK(std::abs(mv.var - 0.25) < 3 * 0.25 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("reproducibility: prefix stability and re-run identity") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto cpl = gaussian_pair(2, 1.0);
  auto big = draw_batch(sched, cpl, 200, TimeSpec::uniform(), false, 99);
  auto small = draw_batch(sched, cpl, 50, TimeSpec::uniform(), false, 99);
  REQUIRE(oracle::bit_equal(big.xt.topRows(50), small.xt));
  REQUIRE(oracle::bit_equal(big.t.head(50), small.t));
  auto again = draw_batch(sched, cpl, 200, TimeSpec::uniform(), false, 99);
  REQUIRE(oracle::bit_equal(big.xt, again.xt));
}

TEST_CASE("antithetic pairs share everything but the latent sign") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto cpl = gaussian_pair(2, 1.0);
  auto b = draw_batch(sched, cpl, 100, TimeSpec::uniform(), true, 5);
  for (std::size_t i = 0; i < 100; i += 2) {
    REQUIRE(b.t[i] == b.t[i + 1]);
    REQUIRE(oracle::bit_equal(b.x0.row(i), b.x0.row(i + 1)));
    REQUIRE(oracle::bit_equal(b.x1.row(i), b.x1.row(i + 1)));
    REQUIRE(oracle::bit_equal(b.z.row(i), (-b.z.row(i + 1)).eval()));
    REQUIRE(b.stream_id[i] == b.stream_id[i + 1]);
  }
  CHECK_THROWS_AS(draw_batch(sched, cpl, 101, TimeSpec::uniform(), true, 5), Error);
}

TEST_CASE("stratified times place one sample per bin") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto cpl = gaussian_pair(1, 1.0);
  const std::size_t n = 64;
  auto b = draw_batch(sched, cpl, n, TimeSpec::stratified(), false, 3);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(b.t[i] >= static_cast<double>(i) / n);
    CHECK(b.t[i] <= static_cast<double>(i + 1) / n);
  }
}

TEST_CASE("one-sided draws: boundaries and variance profile") {
  auto lin = make_schedule(ScheduleName::Linear);
  MixtureSampler target(GaussianMixture::single(Vec::Constant(1, 3.0), SquareMat::Identity(1, 1)));
  auto b0 = draw_one_sided(lin, target, 50000, TimeSpec::fixed(0.0), false, 21);
  // x_t(0) = z: standard normal moments
  std::vector<double> col(50000);
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = b0.xt(i, 0);
  auto mv = oracle::mean_var(col);
  CHECK(std::abs(mv.mean) < 4.0 / std::sqrt(50000.0));
  CHECK(std::abs(mv.var - 1.0) < 0.03);

  auto b1 = draw_one_sided(lin, target, 1000, TimeSpec::fixed(1.0), false, 21);
  REQUIRE(oracle::bit_equal(b1.xt, b1.x1));

  // SBDM keeps unit variance at all times for a unit-variance target
  auto sbdm = make_schedule(ScheduleName::SbdmVp);
  MixtureSampler std1(GaussianMixture::standard(1));
  for (double t : {0.25, 0.6, 0.9}) {
    auto bt = draw_one_sided(sbdm, std1, 100000, TimeSpec::fixed(t), false, 31);
    for (std::size_t i = 0; i < 100000; ++i) col[i % 50000] = bt.xt(i, 0);  // reuse buffer halves
    std::vector<double> all(100000);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = bt.xt(i, 0);
    auto m2 = oracle::mean_var(all);
    CHECK(std::abs(m2.var - 1.0) < 3.0 * std::sqrt(2.0 / 100000.0));
  }
}

TEST_CASE("mirror draws: exact boundaries and variance inflation") {
  auto mir10 = make_schedule(ScheduleName::MirrorFlat, {GammaName::BrownianBridge, 10.0});
  MixtureSampler target(GaussianMixture::single(Vec::Constant(1, -1.5), SquareMat::Identity(1, 1)));
  auto b0 = draw_mirror(mir10, target, 1000, TimeSpec::fixed(0.0), false, 41);
  REQUIRE(oracle::bit_equal(b0.xt, b0.x1));
  auto b1 = draw_mirror(mir10, target, 1000, TimeSpec::fixed(1.0), false, 41);
  REQUIRE(oracle::bit_equal(b1.xt, b1.x1));

  const std::size_t n = 100000;
  auto bm = draw_mirror(mir10, target, n, TimeSpec::fixed(0.5), false, 42);
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = bm.xt(i, 0) - bm.x1(i, 0);
  auto mv = oracle::mean_var(diff);
  // gamma^2(1/2) = 10/4
  CHECK(std::abs(mv.mean) < 4 * std::sqrt(2.5 / n));
  CHECK(std::abs(mv.var - 2.5) < 3 * 2.5 * std::sqrt(2.0 / n));

  // single-row dataset target
  Mat row(1, 1);
  row(0, 0) = 0.7;
  DatasetSampler ds(row);
  auto mir = make_schedule(ScheduleName::MirrorFlat, {GammaName::BrownianBridge, 1.0});
  auto bd = draw_mirror(mir, ds, n, TimeSpec::fixed(0.3), false, 43);
  const double g2 = mir.gamma(0.3) * mir.gamma(0.3);
  for (std::size_t i = 0; i < n; ++i) diff[i] = bd.xt(i, 0) - 0.7;
  mv = oracle::mean_var(diff);
  CHECK(std::abs(mv.mean) < 4 * std::sqrt(g2 / n));
  CHECK(std::abs(mv.var - g2) < 3 * g2 * std::sqrt(2.0 / n));
}

TEST_CASE("empty dataset raises EmptySource") {
  Mat empty(0, 2);
  CHECK_THROWS_AS(DatasetSampler{empty}, EmptySource);
}

TEST_CASE("single-time law matches a direct brownian-bridge simulation") {
  // two-sided gamma = sqrt(2a t(1-t)) vs x^d_t = I + sqrt(2a) B_t
  const double a = 1.0;
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0 * a});
  auto cpl = gaussian_pair(1, 2.0);
  std::mt19937_64 rr(17);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::size_t n = 60000;
  for (int k = 1; k < 20; ++k) {
    const double t = k / 20.0;
    auto b = draw_batch(sched, cpl, n, TimeSpec::fixed(t), false, 1000 + k);
    std::vector<double> ours(n), ref(n);
    for (std::size_t i = 0; i < n; ++i) {
      ours[i] = b.xt(i, 0);
      const double x0 = n01(rr), x1 = 2.0 + n01(rr);
      const double wt = std::sqrt(t) * n01(rr);
      const double w1 = wt + std::sqrt(1.0 - t) * n01(rr);
      ref[i] = (1.0 - t) * x0 + t * x1 + std::sqrt(2.0 * a) * (wt - t * w1);
    }
    auto mo = oracle::mean_var(ours), mr = oracle::mean_var(ref);
    CHECK(std::abs(mo.mean - mr.mean) < 4 * std::sqrt((mo.var + mr.var) / n));
    CHECK(std::abs(mo.var - mr.var) < 4 * (mo.var + mr.var) * std::sqrt(2.0 / n));
  }
}
