#include "si/integrators.hpp"

#include <array>
#include <cmath>

#include "si/errors.hpp"
#include "si/rng.hpp"
#include "si/simd/kernels.hpp"

namespace si {

namespace {

constexpr std::uint64_t kRoleNoise = 0x6e6f;

void check_finite(const Mat& x, const char* where) {
  if (!x.allFinite()) throw NonFinite(std::string("non-finite state in ") + where);
}

// Dormand-Prince tableau
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kE[7] = {71.0 / 57600, 0.0,         -71.0 / 16695, 71.0 / 1920,
                          -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

}  // namespace

DopriResult dopri5(const std::function<void(double, const Vec&, Vec&)>& rhs, Vec y0, double t0,
                   double tf, double rtol, double atol, long max_steps) {
  const double dir = tf >= t0 ? 1.0 : -1.0;
  const double span = std::abs(tf - t0);
  if (span == 0.0) return {std::move(y0), 0};

  Vec y = std::move(y0);
  const Eigen::Index n = y.size();
  std::array<Vec, 7> k;
  for (auto& v : k) v.resize(n);
  Vec ytmp(n), ynew(n), err(n);

  double t = t0;
  double h = dir * std::min(span, std::max(1e-6, span / 100.0));
  rhs(t, y, k[0]);
  long steps = 0;

  while (dir * (tf - t) > 0.0) {
    if (++steps > max_steps) throw Error("dopri5: step budget exhausted");
    if (std::abs(h) < 1e-12) throw StepUnderflow("dopri5: step size underflow");
    if (dir * (t + h - tf) > 0.0) h = tf - t;

    for (int s = 1; s < 7; ++s) {
      ytmp = y;
      for (int j = 0; j < s; ++j)
        if (kA[s][j] != 0.0) ytmp += h * kA[s][j] * k[j];
      rhs(t + kC[s] * h, ytmp, k[s]);
    }
    ynew = ytmp;  // stage 7 state is the 5th-order solution (FSAL)

    err.setZero();
    for (int j = 0; j < 7; ++j)
      if (kE[j] != 0.0) err += kE[j] * k[j];
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double q = h * err[i] / scale;
      norm2 += q * q;
    }
    const double errnorm = std::sqrt(norm2 / static_cast<double>(n));

    if (errnorm <= 1.0) {
      t += h;
      y.swap(ynew);
      k[0] = k[6];  // FSAL
      if (!y.allFinite()) throw NonFinite("dopri5: non-finite state");
    }
    const double fac = errnorm > 0.0 ? 0.9 * std::pow(errnorm, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }
  return {std::move(y), steps};
}

TrajectoryBatch integrate_ode(const DriftField& b, const Mat& x0, double t0, double tf,
                              const OdeOptions& opts) {
  const Eigen::Index n = x0.rows();
  const int d = b.dim();
  TrajectoryBatch out;
  out.direction = tf >= t0 ? Direction::Forward : Direction::Backward;
  out.times.push_back(t0);
  out.states.push_back(x0);

  if (opts.method == OdeMethod::RK4) {
    out.integrator = "rk4";
    const double span = tf - t0;
    const long steps = std::max<long>(1, std::lround(std::abs(span) / opts.dt));
    const double h = span / static_cast<double>(steps);
    Mat x = x0, k1, k2, k3, k4, tmp;
    double t = t0;
    for (long s = 0; s < steps; ++s) {
      b.eval(t, x, k1);
      tmp = x + 0.5 * h * k1;
      b.eval(t + 0.5 * h, tmp, k2);
      tmp = x + 0.5 * h * k2;
      b.eval(t + 0.5 * h, tmp, k3);
      tmp = x + h * k3;
      b.eval(t + h, tmp, k4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = t0 + span * static_cast<double>(s + 1) / static_cast<double>(steps);
      if (opts.store_path) {
        out.times.push_back(t);
        out.states.push_back(x);
      }
    }
    check_finite(x, "integrate_ode");
    if (!opts.store_path) {
      out.times.push_back(tf);
      out.states.push_back(std::move(x));
    }
    return out;
  }

  out.integrator = "dopri5";
  Mat xf(n, d);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat xi(1, d), oi(1, d);
    auto rhs = [&](double t, const Vec& y, Vec& dy) {
      for (int c = 0; c < d; ++c) xi(0, c) = y[c];
      b.eval(t, xi, oi);
      dy = oi.row(0).transpose();
    };
    auto res = dopri5(rhs, x0.row(i).transpose(), t0, tf, opts.rtol, opts.atol, opts.max_steps);
    xf.row(i) = res.y.transpose();
  }
  check_finite(xf, "integrate_ode");
  out.times.push_back(tf);
  out.states.push_back(std::move(xf));
  return out;
}

TrajectoryBatch integrate_sde(const DriftField& drift, const EpsSchedule& eps, const Mat& init,
                              Direction dir, const SdeOptions& opts) {
  const auto& K = simd::kernels();
  const Eigen::Index n = init.rows();
  const int d = drift.dim();
  const int steps = opts.steps;
  if (steps <= 0) throw Error("integrate_sde: steps must be positive");
  const double span = opts.tf - opts.t0;
  const double dt = span / steps;
  const std::uint64_t cpd = static_cast<std::uint64_t>((d + 1) / 2);
  const rng::Philox gnoise{rng::mix_seed(opts.seed, kRoleNoise), 0};

  // generative time of integration variable s in [t0, tf]
  auto gen_time = [&](double s) { return dir == Direction::Forward ? s : 1.0 - s; };

  TrajectoryBatch out;
  out.direction = dir;
  out.seed = opts.seed;
  out.integrator = opts.method == SdeMethod::EulerMaruyama ? "euler-maruyama" : "heun";
  out.times.push_back(gen_time(opts.t0));
  out.states.push_back(init);

  Mat x = init, f1, f2, xpred, noise(n, d);
  for (int s = 0; s < steps; ++s) {
    const double ts = opts.t0 + dt * s;
    const double t_gen = gen_time(ts);
    const double e_here = eps(t_gen);
    const double sig = std::sqrt(2.0 * std::max(0.0, e_here) * dt);

#pragma omp parallel for schedule(static)
    for (Eigen::Index p = 0; p < n; ++p) {
      rng::normal_fill({gnoise.seed, static_cast<std::uint64_t>(p)},
                       static_cast<std::uint64_t>(s) * cpd,
                       {noise.row(p).data(), static_cast<std::size_t>(d)});
    }

    drift.eval(t_gen, x, f1);
    const double drift_sign = dir == Direction::Forward ? 1.0 : -1.0;

    if (opts.method == SdeMethod::EulerMaruyama) {
      K.step_inplace(x.data(), f1.data(), drift_sign * dt, noise.data(), sig,
                     static_cast<std::size_t>(n) * d);
    } else {
      xpred = x;
      K.step_inplace(xpred.data(), f1.data(), drift_sign * dt, noise.data(), sig,
                     static_cast<std::size_t>(n) * d);
      const double ts1 = opts.t0 + dt * (s + 1);
      drift.eval(gen_time(ts1), xpred, f2);
      f1 += f2;
      K.step_inplace(x.data(), f1.data(), 0.5 * drift_sign * dt, noise.data(), sig,
                     static_cast<std::size_t>(n) * d);
    }

    if (opts.store_path || s == steps - 1) {
      out.times.push_back(gen_time(ts + dt));
      out.states.push_back(x);
    }
    if ((s & 63) == 0 && !x.allFinite()) throw NonFinite("integrate_sde: non-finite state");
  }
  check_finite(out.states.back(), "integrate_sde");
  return out;
}

Mat denoiser_iterate(const DriftField& etaz, const Schedule& sched, const Mat& z0, int steps) {
  if (steps < 2) throw Error("denoiser_iterate: need at least 2 steps");
  const Eigen::Index n = z0.rows();
  const int d = etaz.dim();
  Mat x = z0, ez;
  for (int j = 1; j < steps; ++j) {
    const double tj = static_cast<double>(j) / steps;
    const double tj1 = static_cast<double>(j + 1) / steps;
    const double bj = sched.beta(tj);
    if (bj == 0.0) throw DivideByZeroBeta("denoiser_iterate: beta vanishes on the grid");
    const double ratio = sched.beta(tj1) / bj;
    const double coef = sched.alpha(tj1) - sched.alpha(tj) * ratio;
    etaz.eval(tj, x, ez);
    x = ratio * x + coef * ez;
    (void)n;
  }
  check_finite(x, "denoiser_iterate");
  return x;
}

Mat final_denoise(const DriftField& etaz, const Schedule& sched, const Mat& x, double t_from) {
  const double bt = sched.beta(t_from);
  if (bt == 0.0) throw DivideByZeroBeta("final_denoise: beta(t_from) = 0");
  Mat ez;
  etaz.eval(t_from, x, ez);
  const double ratio = sched.beta(1.0) / bt;
  const double coef = sched.alpha(1.0) - sched.alpha(t_from) * ratio;
  return ratio * x + coef * ez;
}

TrajectoryBatch sample_point_mass(const PointMassDrift& pm, std::size_t n, int steps,
                                  std::uint64_t seed, SdeMethod method) {
  const int d = pm.dim();
  Mat init(n, d);
  for (std::size_t i = 0; i < n; ++i) init.row(i) = pm.origin().transpose();
  auto field = std::make_shared<PointMassField>(
      std::make_shared<PointMassDrift>(pm));
  SdeOptions opts;
  opts.method = method;
  opts.steps = steps;
  opts.seed = seed;
  return integrate_sde(*field, EpsSchedule::constant(pm.diffusion_a()), init, Direction::Forward,
                       opts);
}

}  // namespace si
