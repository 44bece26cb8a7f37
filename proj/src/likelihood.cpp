#include "si/likelihood.hpp"

#include <cmath>

#include "si/errors.hpp"
#include "si/rng.hpp"
#include "si/stats.hpp"

namespace si {

namespace {
constexpr std::uint64_t kRoleFk = 0x666b;

// augmented rhs: state = (x, divergence integral)
std::function<void(double, const Vec&, Vec&)> augmented_rhs(const DriftField& b, int d) {
  return [&b, d](double t, const Vec& y, Vec& dy) {
    Mat xi(1, d);
    for (int c = 0; c < d; ++c) xi(0, c) = y[c];
    Mat f;
    b.eval(t, xi, f);
    Vec div;
    b.divergence(t, xi, div);
    dy.resize(d + 1);
    for (int c = 0; c < d; ++c) dy[c] = f(0, c);
    dy[d] = div[0];
  };
}
}  // namespace

LogDensityResult log_density_ode(const DriftField& b, const GaussianMixture& anchor,
                                 const double* x, Direction dir, const OdeOptions& opts) {
  const int d = b.dim();
  Vec y0(d + 1);
  for (int c = 0; c < d; ++c) y0[c] = x[c];
  y0[d] = 0.0;

  const double t_from = dir == Direction::Forward ? 1.0 : 0.0;
  const double t_to = dir == Direction::Forward ? 0.0 : 1.0;
  auto res = dopri5(augmented_rhs(b, d), std::move(y0), t_from, t_to, opts.rtol, opts.atol,
                    opts.max_steps);

  LogDensityResult out;
  out.endpoint = res.y.head(d);
  // forward: log rho(1,x) = -int_0^1 div b + log rho0(X_{1,0}(x)); the signed
  // integral along 1 -> 0 already carries the minus sign
  out.divergence_integral = res.y[d];
  out.log_density = res.y[d] + anchor.log_density(out.endpoint.data());
  return out;
}

LogDensityResult density_feynman_kac(const DriftField& b, const DriftField& s, double eps,
                                     const GaussianMixture& anchor, const double* x, Direction dir,
                                     const FeynmanKacOptions& opts) {
  if (eps <= 0.0) throw MissingScore("feynman-kac density requires eps > 0");
  const int d = b.dim();
  const int n = opts.n_paths;
  const int steps = opts.steps;
  const double dt = 1.0 / steps;
  const double sig = std::sqrt(2.0 * eps * dt);
  const std::uint64_t cpd = static_cast<std::uint64_t>((d + 1) / 2);
  const rng::Philox g{rng::mix_seed(opts.seed, kRoleFk), 0};

  // Forward target rho_F(1, x): paths of the backward auxiliary SDE with
  // drift b_F = b + eps s run in reversed time from x; weight uses div b_F.
  // Backward target rho_B(0, x): forward auxiliary SDE with drift b_B = b - eps s
  // from x; weight uses +div b_B.
  const double score_sign = dir == Direction::Forward ? 1.0 : -1.0;
  const double drift_sign = dir == Direction::Forward ? -1.0 : 1.0;  // reversed-time run
  const double weight_sign = dir == Direction::Forward ? -1.0 : 1.0;

  auto gen_time = [&](double ss) { return dir == Direction::Forward ? 1.0 - ss : ss; };

  Mat xs(n, d);
  for (int p = 0; p < n; ++p)
    for (int c = 0; c < d; ++c) xs(p, c) = x[c];
  Vec acc = Vec::Zero(n);

  Mat f, sv, noise(n, d);
  Vec div(n);
  for (int k = 0; k < steps; ++k) {
    const double ss = k * dt;
    const double t = gen_time(ss);
    b.eval(t, xs, f);
    s.eval(t, xs, sv);
    f += score_sign * eps * sv;

    // divergence of the FPE drift at the current points
    b.divergence(t, xs, div);
    Vec div_s(n);
    s.divergence(t, xs, div_s);
    div += score_sign * eps * div_s;
    acc += weight_sign * dt * div;

#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p)
      rng::normal_fill({g.seed, static_cast<std::uint64_t>(p)},
                       static_cast<std::uint64_t>(k) * cpd,
                       {noise.row(p).data(), static_cast<std::size_t>(d)});
    xs += drift_sign * dt * f + sig * noise;
  }
  if (!xs.allFinite()) throw NonFinite("feynman-kac paths diverged");

  std::vector<double> logw(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) logw[p] = acc[p] + anchor.log_density(xs.row(p).data());

  // effective sample size of the normalized weights
  const double lse = log_sum_exp(logw);
  double ess_inv = 0.0;
  for (double lw : logw) ess_inv += std::exp(2.0 * (lw - lse));
  if (1.0 / ess_inv < 10.0) throw DegenerateWeight("feynman-kac effective sample size < 10");

  LogDensityResult out;
  out.n_paths = n;
  out.log_density = lse - std::log(static_cast<double>(n));
  out.divergence_integral = mean(std::span<const double>(acc.data(), acc.size()));

  // jackknife over path blocks
  const int nb = std::min(opts.jackknife_blocks, n);
  std::vector<double> loo(nb);
  const int per = n / nb;
  for (int bk = 0; bk < nb; ++bk) {
    std::vector<double> rest;
    rest.reserve(n - per);
    for (int p = 0; p < n; ++p)
      if (p / per != bk || p / per >= nb) rest.push_back(logw[p]);
    loo[bk] = log_sum_exp(rest) - std::log(static_cast<double>(rest.size()));
  }
  const double lm = mean(loo);
  double var = 0.0;
  for (double v : loo) var += (v - lm) * (v - lm);
  out.std_error = std::sqrt(var * (nb - 1) / nb);
  return out;
}

CrossEntropyResult cross_entropy_ode(const DriftField& b, const GaussianMixture& anchor,
                                     const Mat& samples, Direction dir, const OdeOptions& opts) {
  const Eigen::Index n = samples.rows();
  std::vector<double> vals(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index i = 0; i < n; ++i) {
    vals[static_cast<std::size_t>(i)] =
        -log_density_ode(b, anchor, samples.row(i).data(), dir, opts).log_density;
  }
  CrossEntropyResult out;
  out.n = static_cast<std::size_t>(n);
  out.value = mean(vals);
  out.std_error = stderr_of_mean(vals);
  return out;
}

SdeCrossEntropyResult cross_entropy_sde_bound(const DriftField& b, const DriftField& s, double eps,
                                              const GaussianMixture& anchor, const Mat& samples,
                                              Direction dir, const SdeCrossEntropyOptions& opts) {
  if (eps <= 0.0) {
    // degenerate: no stochastic term, fall back to the ODE estimator
    OdeOptions ode;
    const auto ce = cross_entropy_ode(b, anchor, samples, dir, ode);
    SdeCrossEntropyResult out;
    out.jensen_bound = ce.value;
    out.bound_std_error = ce.std_error;
    out.n = ce.n;
    return out;
  }

  const Eigen::Index n = samples.rows();
  const int d = b.dim();
  const int ppx = opts.paths_per_sample;
  const int steps = opts.steps;
  const double dt = 1.0 / steps;
  const double sig = std::sqrt(2.0 * eps * dt);
  const std::uint64_t cpd = static_cast<std::uint64_t>((d + 1) / 2);
  const rng::Philox g{rng::mix_seed(opts.seed, kRoleFk), 0};

  const double score_sign = dir == Direction::Forward ? 1.0 : -1.0;
  const double drift_sign = dir == Direction::Forward ? -1.0 : 1.0;
  const double weight_sign = dir == Direction::Forward ? -1.0 : 1.0;
  auto gen_time = [&](double ss) { return dir == Direction::Forward ? 1.0 - ss : ss; };

  const Eigen::Index total = n * ppx;
  Mat xs(total, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int p = 0; p < ppx; ++p) xs.row(i * ppx + p) = samples.row(i);
  Vec acc = Vec::Zero(total);

  Mat f, sv, noise(total, d);
  Vec div(total), div_s(total);
  for (int k = 0; k < steps; ++k) {
    const double t = gen_time(k * dt);
    b.eval(t, xs, f);
    s.eval(t, xs, sv);
    f += score_sign * eps * sv;
    b.divergence(t, xs, div);
    s.divergence(t, xs, div_s);
    div += score_sign * eps * div_s;
    acc += weight_sign * dt * div;
#pragma omp parallel for schedule(static)
    for (Eigen::Index p = 0; p < total; ++p)
      rng::normal_fill({g.seed, static_cast<std::uint64_t>(p)},
                       static_cast<std::uint64_t>(k) * cpd,
                       {noise.row(p).data(), static_cast<std::size_t>(d)});
    xs += drift_sign * dt * f + sig * noise;
  }
  if (!xs.allFinite()) throw NonFinite("sde cross-entropy paths diverged");

  // Jensen bound: E[ -weight - log anchor(end) ] with weight as in the
  // path-expectation density
  std::vector<double> per_sample(static_cast<std::size_t>(n));
  std::vector<double> log_means(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = 0.0;
    std::vector<double> lw(static_cast<std::size_t>(ppx));
    for (int p = 0; p < ppx; ++p) {
      const Eigen::Index r = i * ppx + p;
      const double la = anchor.log_density(xs.row(r).data());
      m += -(acc[r] + la);
      lw[static_cast<std::size_t>(p)] = acc[r] + la;
    }
    per_sample[static_cast<std::size_t>(i)] = m / ppx;
    log_means[static_cast<std::size_t>(i)] =
        -(log_sum_exp(lw) - std::log(static_cast<double>(ppx)));
  }

  SdeCrossEntropyResult out;
  out.n = static_cast<std::size_t>(n);
  out.jensen_bound = mean(per_sample);
  out.bound_std_error = stderr_of_mean(per_sample);
  if (opts.with_log_mean) {
    out.log_mean_estimate = mean(log_means);
    out.biased_inside_log = !b.has_exact_divergence() || !s.has_exact_divergence();
  }
  return out;
}

KlBound kl_bound(double loss_b_hat, double loss_b_min, double loss_s_hat, double loss_s_min,
                 double eps) {
  KlBound out;
  double gap_b = loss_b_hat - loss_b_min;
  double gap_s = loss_s_hat - loss_s_min;
  if (gap_b < 0.0 || gap_s < 0.0) {
    out.gaps_clamped = true;
    gap_b = std::max(0.0, gap_b);
    gap_s = std::max(0.0, gap_s);
  }
  if (gap_b == 0.0 && gap_s == 0.0) {
    out.both_gaps_zero = true;
    out.value = 0.0;
    return out;
  }
  out.value = gap_b / (2.0 * eps) + 0.5 * eps * gap_s;
  return out;
}

double optimal_eps(double gap_b, double gap_s) {
  gap_b = std::max(0.0, gap_b);
  gap_s = std::max(0.0, gap_s);
  if (gap_s == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(gap_b / gap_s);
}

KlBound kl_bound_v(double gap_v, double gap_s, double eps, const Schedule& sched) {
  KlBound out;
  if (gap_v < 0.0 || gap_s < 0.0) {
    out.gaps_clamped = true;
    gap_v = std::max(0.0, gap_v);
    gap_s = std::max(0.0, gap_s);
  }
  if (gap_v == 0.0 && gap_s == 0.0) {
    out.both_gaps_zero = true;
    return out;
  }
  double sup = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double t = i / 2000.0;
    const double q = sched.gg(t) - eps;
    sup = std::max(sup, q * q);
  }
  out.value = gap_v / (2.0 * eps) + sup / (2.0 * eps) * gap_s;
  return out;
}

}  // namespace si
