#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "si/errors.hpp"
#include "si/regression.hpp"

using namespace si;

namespace {

GaussianMixture two_mode_1d() {
  Vec w(2);
  w << 0.4, 0.6;
  Mat m(2, 1);
  m << -2.0, 1.5;
  std::vector<SquareMat> c{SquareMat::Constant(1, 1, 0.25), SquareMat::Constant(1, 1, 0.64)};
  return GaussianMixture::create(w, m, c);
}

GaussianMixture three_mode_1d() {
  Vec w(3);
  w << 0.3, 0.45, 0.25;
  Mat m(3, 1);
  m << -3.0, 0.5, 3.5;
  std::vector<SquareMat> c{SquareMat::Constant(1, 1, 0.36), SquareMat::Constant(1, 1, 0.49),
                           SquareMat::Constant(1, 1, 0.16)};
  return GaussianMixture::create(w, m, c);
}

std::shared_ptr<const FeatureMap> make_fmap(const DrawBatch& draws, int count,
                                            bool linear = false) {
  FeatureMapConfig cfg;
  cfg.count = count;
  cfg.include_linear = linear;
  cfg.seed = 1234;
  const Mat inputs = feature_inputs_sample(draws);
  return std::make_shared<FeatureMap>(FeatureMap::build(cfg, draws.dim(), &inputs));
}

// weighted L2(rho) error via the draw measure itself
double weighted_l2_error(const DriftField& fhat, const DriftField& fstar, const DrawBatch& draws,
                         std::size_t max_rows = 50000) {
  const std::size_t n = std::min(max_rows, draws.size());
  double acc = 0.0;
  Mat a, b;
  Mat pts = draws.xt.topRows(n);
  Vec ts = draws.t.head(n);
  for (std::size_t i = 0; i < n; ++i) {
    Mat xi = pts.row(i);
    fhat.eval(ts[i], xi, a);
    fstar.eval(ts[i], xi, b);
    acc += (a - b).squaredNorm();
  }
  return std::sqrt(acc / n);
}

}  // namespace

TEST_CASE("feature divergences match finite differences") {
  std::mt19937_64 rr(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (bool linear : {false, true}) {
    for (FeatureKind kind : {FeatureKind::RandomFourier, FeatureKind::RBFGrid}) {
      FeatureMapConfig cfg;
      cfg.kind = kind;
      cfg.count = 64;
      cfg.include_linear = linear;
      cfg.bandwidth = 1.5;
      Mat inputs(64, 3);
      for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 3; ++j) inputs(i, j) = n01(rr);
      auto fm = std::make_shared<FeatureMap>(FeatureMap::build(cfg, 2, &inputs));

      FeatureModel model;
      model.fmap = fm;
      model.weights.resize(2, fm->feature_count());
      for (Eigen::Index i = 0; i < model.weights.size(); ++i) model.weights.data()[i] = n01(rr);
      model.finalize();

      for (int k = 0; k < 50; ++k) {
        const double t = 0.3;
        double x[2] = {n01(rr), n01(rr)};
        Vec tv(1);
        tv[0] = t;
        Mat xm(1, 2);
        xm << x[0], x[1];
        Vec dv;
        model.divergence_each(tv, xm, dv);
        auto field = [&](const double* q, double* out) {
          Mat qm(1, 2);
          qm << q[0], q[1];
          Mat o;
          model.eval_fixed_t(t, qm, o);
          out[0] = o(0, 0);
          out[1] = o(0, 1);
        };
        const double fd = oracle::divergence_fd(field, x, 2, 1e-5);
        CHECK(std::abs(fd - dv[0]) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("identity field via linear features has divergence d") {
  FeatureMapConfig cfg;
  cfg.count = 4;
  cfg.include_linear = true;
  cfg.bandwidth = 1.0;
  auto fm = std::make_shared<FeatureMap>(FeatureMap::build(cfg, 3));
  FeatureModel model;
  model.fmap = fm;
  model.weights = Mat::Zero(3, fm->feature_count());
  // linear block layout: [t, x1, x2, x3] after count+bias
  const int lin0 = cfg.count + 1;
  for (int k = 0; k < 3; ++k) model.weights(k, lin0 + 1 + k) = 1.0;
  model.finalize();

  Mat x(1, 3);
  x << 0.3, -1.2, 0.8;
  Mat out;
  model.eval_fixed_t(0.5, x, out);
  for (int k = 0; k < 3; ++k) CHECK(out(0, k) == doctest::Approx(x(0, k)));
  Vec tv(1), dv;
  tv[0] = 0.5;
  model.divergence_each(tv, x, dv);
  CHECK(dv[0] == doctest::Approx(3.0));

  // zero-weight model
  model.weights.setZero();
  model.finalize();
  model.divergence_each(tv, x, dv);
  CHECK(dv[0] == doctest::Approx(0.0));
}

TEST_CASE("constant conditional mean is recovered exactly through the bias") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto s0 = std::make_shared<MixtureSampler>(GaussianMixture::standard(2));
  const Vec c = (Vec(2) << 1.25, -0.5).finished();
  auto s1 = std::make_shared<PointMassSampler>(c);
  auto draws = draw_batch(sched, Coupling::independent(s0, s1), 20000, TimeSpec::uniform(), false, 3);
  auto fmap = make_fmap(draws, 16);
  auto model = fit(TargetTag::Eta1, draws, fmap, {.ridge_lambda = 1e-14});
  std::mt19937_64 rr(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    Mat x(1, 2);
    x << 2.0 * n01(rr), 2.0 * n01(rr);
    Mat out;
    model.eval_fixed_t(0.2 + 0.6 * (k / 30.0), x, out);
    CHECK(std::abs(out(0, 0) - c[0]) < 1e-8);
    CHECK(std::abs(out(0, 1) - c[1]) < 1e-8);
  }
}

TEST_CASE("constant-velocity pair is learned to 0.05 sup error") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0});
  auto g0 = GaussianMixture::standard(1);
  auto g1 = GaussianMixture::single(Vec::Constant(1, 3.0), SquareMat::Identity(1, 1));
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g1));
  auto draws =
      draw_batch(sched, cpl, 200000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 17);
  FeatureMapConfig cfg;
  cfg.count = 500;
  cfg.seed = 5;
  const Mat inputs = feature_inputs_sample(draws);
  auto fmap = std::make_shared<FeatureMap>(FeatureMap::build(cfg, 1, &inputs));
  auto model = fit(TargetTag::B, draws, fmap);

  // 100 random interior points drawn from the interpolant law itself
  auto eval_draws = draw_batch(sched, cpl, 100, TimeSpec::uniform(0.02, 0.98), false, 777);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Mat x = eval_draws.xt.row(k);
    Mat out;
    model.eval_fixed_t(eval_draws.t[k], x, out);
    worst = std::max(worst, std::abs(out(0, 0) - 3.0));
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("denoiser fit reaches the analytic field in weighted L2") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto g0 = two_mode_1d();
  auto g1 = three_mode_1d();
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g1));
  auto draws = draw_batch(sched, cpl, 500000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 23);
  FeatureMapConfig cfg;
  cfg.count = 1000;
  cfg.seed = 7;
  const Mat inputs = feature_inputs_sample(draws);
  auto fmap = std::make_shared<FeatureMap>(FeatureMap::build(cfg, 1, &inputs));
  auto models = fit_multi({TargetTag::EtaZ, TargetTag::Eta0, TargetTag::Eta1}, draws, fmap);

  FeatureField etaz_hat(models[0]);
  GmmField etaz_star(g0, g1, sched, GmmQuantity::EtaZ);
  auto eval_draws = draw_batch(sched, cpl, 20000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), false, 29);
  const double err = weighted_l2_error(etaz_hat, etaz_star, eval_draws, 20000);
  CHECK(err <= 0.05);

  // factorization consistency: alpha eta0 + beta eta1 + gamma etaz == x
  const std::size_t m = 5000;
  double resid = 0.0;
  Mat e0, e1, ez;
  FeatureField f0(models[1]), f1(models[2]);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = eval_draws.t[i];
    Mat xi = eval_draws.xt.row(i);
    f0.eval(t, xi, e0);
    f1.eval(t, xi, e1);
    etaz_hat.eval(t, xi, ez);
    const double lhs = sched.alpha(t) * e0(0, 0) + sched.beta(t) * e1(0, 0) +
                       sched.gamma(t) * ez(0, 0);
    resid += (lhs - xi(0, 0)) * (lhs - xi(0, 0));
  }
  resid = std::sqrt(resid / m);
  GmmField e0_star(g0, g1, sched, GmmQuantity::Eta0), e1_star(g0, g1, sched, GmmQuantity::Eta1);
  const double err0 = weighted_l2_error(f0, e0_star, eval_draws, m);
  const double err1 = weighted_l2_error(f1, e1_star, eval_draws, m);
  CHECK(resid <= 3.0 * std::max({err, err0, err1}));
}

TEST_CASE("empirical loss is minimized by the true field") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0});
  auto g0 = GaussianMixture::standard(1);
  auto g1 = GaussianMixture::single(Vec::Constant(1, 3.0), SquareMat::Identity(1, 1));
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g1));
  auto draws = draw_batch(sched, cpl, 50000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 31);

  GmmField b_star(g0, g1, sched, GmmQuantity::B);
  const double base = empirical_loss(TargetTag::B, b_star, draws).value;
  std::mt19937_64 rr(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    const double bump = 0.3 * n01(rr);
    LambdaField bumped(1, [&b_star, bump](double t, const double* x, double* out) {
      b_star.eval_point(t, x, out);
      out[0] += bump;
    });
    CHECK(empirical_loss(TargetTag::B, bumped, draws).value >= base);
  }

  // L_{eta_z} at the zero field vanishes identically
  LambdaField zero(1, [](double, const double*, double* out) { out[0] = 0.0; });
  CHECK(empirical_loss(TargetTag::EtaZ, zero, draws).value == doctest::Approx(0.0));
}

TEST_CASE("loss gap equals half the weighted L2 distance") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0});
  auto g0 = GaussianMixture::standard(1);
  auto g1 = GaussianMixture::single(Vec::Constant(1, 3.0), SquareMat::Identity(1, 1));
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g1));
  auto draws = draw_batch(sched, cpl, 200000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 37);

  GmmField b_star(g0, g1, sched, GmmQuantity::B);
  const double delta = 0.4;
  LambdaField perturbed(1, [&b_star, delta](double t, const double* x, double* out) {
    b_star.eval_point(t, x, out);
    out[0] += delta;
  });
  const auto li_hat = loss_integrand(TargetTag::B, perturbed, draws);
  const auto li_star = loss_integrand(TargetTag::B, b_star, draws);
  std::vector<double> diff(li_hat.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = li_hat[i] - li_star[i];
  auto mv = oracle::mean_var(diff);
  // gap should equal 0.5 * delta^2 exactly in expectation
  CHECK(std::abs(mv.mean - 0.5 * delta * delta) < 2.0 * mv.sem + 1e-12);
}

TEST_CASE("antithetic pairing tames the score-objective variance at small t") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto g0 = GaussianMixture::standard(1);
  auto g1 = GaussianMixture::single(Vec::Constant(1, 3.0), SquareMat::Identity(1, 1));
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g1));
  const double t0 = 1e-3;
  auto draws = draw_batch(sched, cpl, 100000, TimeSpec::fixed(t0), true, 41);

  GmmField s_star(g0, g1, sched, GmmQuantity::S);
  const auto vals = loss_integrand(TargetTag::S, s_star, draws);
  auto naive = oracle::mean_var(vals);
  std::vector<double> paired(vals.size() / 2);
  for (std::size_t i = 0; i < paired.size(); ++i)
    paired[i] = 0.5 * (vals[2 * i] + vals[2 * i + 1]);
  auto anti = oracle::mean_var(paired);
  CHECK(naive.var / anti.var >= 10.0);
}

TEST_CASE("score fit preconditions") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto g0 = GaussianMixture::standard(1);
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g0));
  auto no_anti = draw_batch(sched, cpl, 1000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), false, 43);
  auto fmap = make_fmap(no_anti, 16);
  CHECK_THROWS_AS(fit(TargetTag::S, no_anti, fmap), SingularGamma);
  auto uncapped = draw_batch(sched, cpl, 1000, TimeSpec::uniform(), true, 43);
  CHECK_THROWS_AS(fit(TargetTag::S, uncapped, fmap), SingularGamma);
}

TEST_CASE("score matching on the stationary gaussian") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0});
  auto g0 = GaussianMixture::standard(1);
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g0));
  auto draws = draw_batch(sched, cpl, 100000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 47);
  auto fmap = make_fmap(draws, 256);
  auto sm = fit_score_matching(draws, fmap);

  double worst = 0.0;
  for (double x = -2.0; x <= 2.0; x += 0.1) {
    Mat xm(1, 1);
    xm << x;
    Mat out;
    sm.eval_fixed_t(0.5, xm, out);
    worst = std::max(worst, std::abs(out(0, 0) + x));
  }
  CHECK(worst <= 0.05);

  // agreement with the z-based score fit in weighted L2
  auto sfit = fit(TargetTag::S, draws, fmap);
  FeatureField a(sm), b(sfit);
  auto eval_draws = draw_batch(sched, cpl, 20000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), false, 49);
  CHECK(weighted_l2_error(a, b, eval_draws, 20000) <= 0.05);
}

TEST_CASE("rank deficiency without ridge raises IllConditioned") {
  auto sched = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  auto g0 = GaussianMixture::standard(1);
  auto cpl = Coupling::independent(std::make_shared<MixtureSampler>(g0),
                                   std::make_shared<MixtureSampler>(g0));
  auto draws = draw_batch(sched, cpl, 64, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 53);
  auto fmap = make_fmap(draws, 256);
  CHECK_THROWS_AS(fit(TargetTag::EtaZ, draws, fmap, {.ridge_lambda = 0.0}), IllConditioned);
  CHECK_NOTHROW(fit(TargetTag::EtaZ, draws, fmap, {.ridge_lambda = 1e-6}));
}

TEST_CASE("one-sided velocity assembled from the denoiser matches a direct fit") {
  auto sched = make_schedule(ScheduleName::Linear);  // one-sided linear
  auto g1 = three_mode_1d();
  MixtureSampler target(g1);
  auto draws = draw_one_sided(sched, target, 200000, TimeSpec::uniform(1e-4, 1.0 - 1e-4), true, 59);
  FeatureMapConfig cfg;
  cfg.count = 512;
  cfg.seed = 11;
  const Mat inputs = feature_inputs_sample(draws);
  auto fmap = std::make_shared<FeatureMap>(FeatureMap::build(cfg, 1, &inputs));
  auto models = fit_multi({TargetTag::B, TargetTag::EtaZ}, draws, fmap);

  auto b_direct = std::make_shared<FeatureField>(models[0]);
  auto etaz = std::make_shared<FeatureField>(models[1]);
  OneSidedDenoiserVelocity b_assembled(etaz, sched, g1.mean());

  auto g0 = GaussianMixture::standard(1);
  GmmField b_star(g0, g1, sched, GmmQuantity::B);
  auto eval_draws = draw_one_sided(sched, target, 20000, TimeSpec::uniform(0.1, 0.95), false, 61);
  const double err_direct = weighted_l2_error(*b_direct, b_star, eval_draws, 20000);
  const double err_assembled = weighted_l2_error(b_assembled, b_star, eval_draws, 20000);
  CHECK(err_assembled <= 2.0 * std::max(err_direct, 0.02) + 0.02);

  // the t = 0 supplement is exact for the analytic field
  Mat x(1, 1), out;
  x << 0.7;
  b_assembled.eval(0.0, x, out);
  CHECK(out(0, 0) == doctest::Approx(sched.d_alpha(0.0) * 0.7 + sched.d_beta(0.0) * g1.mean()[0])
                         .epsilon(1e-12));
}
