#include "si/gmm.hpp"

#include <cmath>
#include <numbers>

#include "si/errors.hpp"

namespace si {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

SquareMat checked_cholesky(const SquareMat& cov) {
  Eigen::LLT<SquareMat> llt(cov);
  if (llt.info() != Eigen::Success) throw SingularCovariance("cholesky factorization failed");
  SquareMat l = llt.matrixL();
  const double floor = 1e-12 * cov.trace() / static_cast<double>(cov.rows());
  for (int k = 0; k < l.rows(); ++k) {
    if (l(k, k) * l(k, k) < floor) throw SingularCovariance("covariance pivot below threshold");
  }
  return l;
}

double gauss_log_norm(const SquareMat& chol_l) {
  double s = 0.0;
  for (int k = 0; k < chol_l.rows(); ++k) s += std::log(chol_l(k, k));
  return -0.5 * kLog2Pi * static_cast<double>(chol_l.rows()) - s;
}
}  // namespace

GaussianMixture GaussianMixture::create(Vec weights, Mat means, std::vector<SquareMat> covs) {
  GaussianMixture g;
  const int n = static_cast<int>(weights.size());
  if (n == 0 || means.rows() != n || static_cast<int>(covs.size()) != n)
    throw Error("mixture: inconsistent component counts");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw Error("mixture: weights must sum to 1");
  for (int i = 0; i < n; ++i)
    if (weights[i] <= 0.0) throw Error("mixture: weights must be positive");

  g.weights = std::move(weights);
  g.means = std::move(means);
  g.covs = std::move(covs);
  g.chol_l.reserve(n);
  g.log_weights.resize(n);
  g.log_norms.resize(n);
  for (int i = 0; i < n; ++i) {
    g.chol_l.push_back(checked_cholesky(g.covs[i]));
    g.log_weights[i] = std::log(g.weights[i]);
    g.log_norms[i] = gauss_log_norm(g.chol_l[i]);
  }
  return g;
}

GaussianMixture GaussianMixture::standard(int d) {
  return single(Vec::Zero(d), SquareMat::Identity(d, d));
}

GaussianMixture GaussianMixture::single(const Vec& mean, const SquareMat& cov) {
  Vec w(1);
  w[0] = 1.0;
  Mat m(1, mean.size());
  m.row(0) = mean.transpose();
  return create(w, m, {cov});
}

GaussianMixture GaussianMixture::random(int d, int modes, double mean_sigma, std::uint64_t seed) {
  Vec w = Vec::Constant(modes, 1.0 / modes);
  Mat means(modes, d);
  std::vector<SquareMat> covs;
  covs.reserve(modes);
  const std::uint64_t half_d = (d + 1) / 2;
  for (int i = 0; i < modes; ++i) {
    rng::Philox p{seed, static_cast<std::uint64_t>(i)};
    std::vector<double> buf(static_cast<std::size_t>(d) * (d + 1));
    rng::normal_fill(p, 0, buf);
    for (int k = 0; k < d; ++k) means(i, k) = mean_sigma * buf[k];
    SquareMat wmat(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) wmat(r, c) = buf[d + r * d + c];
    SquareMat cov = wmat.transpose() * wmat / static_cast<double>(d);
    cov += SquareMat::Identity(d, d);
    covs.push_back(cov);
  }
  (void)half_d;
  return create(std::move(w), std::move(means), std::move(covs));
}

double GaussianMixture::log_density(const double* x) const {
  const int d = dim();
  Eigen::Map<const Vec> xv(x, d);
  double best = -std::numeric_limits<double>::infinity();
  const int n = modes();
  std::vector<double> logs(n);
  for (int i = 0; i < n; ++i) {
    Vec r = xv - means.row(i).transpose();
    chol_l[i].triangularView<Eigen::Lower>().solveInPlace(r);
    logs[i] = log_weights[i] + log_norms[i] - 0.5 * r.squaredNorm();
    best = std::max(best, logs[i]);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - best);
  return best + std::log(acc);
}

void GaussianMixture::score(const double* x, double* out) const {
  const int d = dim();
  const int n = modes();
  Eigen::Map<const Vec> xv(x, d);
  Eigen::Map<Vec> sv(out, d);
  std::vector<double> logs(n);
  std::vector<Vec> us(n);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    Vec r = xv - means.row(i).transpose();
    Vec y = r;
    chol_l[i].triangularView<Eigen::Lower>().solveInPlace(y);
    logs[i] = log_weights[i] + log_norms[i] - 0.5 * y.squaredNorm();
    chol_l[i].transpose().triangularView<Eigen::Upper>().solveInPlace(y);
    us[i] = y;  // C^{-1} (x - m)
    best = std::max(best, logs[i]);
  }
  double wsum = 0.0;
  sv.setZero();
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(logs[i] - best);
    wsum += w;
    sv -= w * us[i];
  }
  sv /= wsum;
}

Vec GaussianMixture::mean() const {
  Vec m = Vec::Zero(dim());
  for (int i = 0; i < modes(); ++i) m += weights[i] * means.row(i).transpose();
  return m;
}

SquareMat GaussianMixture::covariance() const {
  const int d = dim();
  const Vec mbar = mean();
  SquareMat c = SquareMat::Zero(d, d);
  for (int i = 0; i < modes(); ++i) {
    const Vec mi = means.row(i).transpose();
    c += weights[i] * (covs[i] + mi * mi.transpose());
  }
  c -= mbar * mbar.transpose();
  return c;
}

void GaussianMixture::sample(const rng::Philox& g, std::uint64_t idx, double* out) const {
  const int d = dim();
  const rng::Philox p{g.seed, g.stream + idx};
  const double u = rng::uniform(p, 0);
  int comp = 0;
  double acc = 0.0;
  for (int i = 0; i < modes(); ++i) {
    acc += weights[i];
    if (u <= acc || i == modes() - 1) {
      comp = i;
      break;
    }
  }
  std::vector<double> z(d);
  rng::normal_fill(p, 1, z);
  Eigen::Map<Vec> xv(out, d);
  xv = means.row(comp).transpose();
  xv.noalias() += chol_l[comp] * Eigen::Map<const Vec>(z.data(), d);
}

// ---------------------------------------------------------------------------

GmmBridge::GmmBridge(const GaussianMixture& mix0, const GaussianMixture& mix1,
                     const Schedule& sched, double t)
    : d_(mix1.dim()), t_(t), mix0_(&mix0), mix1_(&mix1) {
  if (mix0.dim() != mix1.dim()) throw Error("bridge: endpoint dimensions differ");

  if (sched.kind == ScheduleKind::Mirror) {
    alpha_ = 0.0;
    beta_ = sched.alpha(t);
    da_ = 0.0;
    db_ = sched.d_alpha(t);
    aa_ = 0.0;
    bb_ = sched.aa(t);
  } else {
    alpha_ = sched.alpha(t);
    beta_ = sched.beta(t);
    da_ = sched.d_alpha(t);
    db_ = sched.d_beta(t);
    aa_ = sched.aa(t);
    bb_ = sched.bb(t);
  }
  gamma_ = sched.gamma(t);
  gg_ = sched.gg(t);

  const bool da_singular = !std::isfinite(da_);
  if (da_singular && mix0.means.cwiseAbs().maxCoeff() != 0.0)
    throw NonFinite("bridge: singular d_alpha with nonzero base mean");

  const double g2 = gamma_ * gamma_;
  comps_.reserve(static_cast<std::size_t>(mix0.modes()) * mix1.modes());
  for (int i = 0; i < mix0.modes(); ++i) {
    for (int j = 0; j < mix1.modes(); ++j) {
      Component c;
      c.i = i;
      c.j = j;
      c.m = alpha_ * mix0.means.row(i).transpose() + beta_ * mix1.means.row(j).transpose();
      c.dm = db_ * mix1.means.row(j).transpose();
      if (!da_singular) c.dm += da_ * mix0.means.row(i).transpose();
      c.cov = alpha_ * alpha_ * mix0.covs[i] + beta_ * beta_ * mix1.covs[j];
      c.cov.diagonal().array() += g2;
      c.dcov = 2.0 * aa_ * mix0.covs[i] + 2.0 * bb_ * mix1.covs[j];
      c.dcov.diagonal().array() += 2.0 * gg_;
      c.chol = checked_cholesky(c.cov);
      SquareMat ident = SquareMat::Identity(d_, d_);
      c.chol.triangularView<Eigen::Lower>().solveInPlace(ident);
      c.cov_inv = ident.transpose() * ident;  // L^{-T} L^{-1}
      c.log_w = mix0.log_weights[i] + mix1.log_weights[j] + gauss_log_norm(c.chol);
      c.tr_dcov_cinv = (c.dcov.array() * c.cov_inv.array()).sum();
      c.tr_cinv = c.cov_inv.trace();
      comps_.push_back(std::move(c));
    }
  }
}

double GmmBridge::log_density(const double* x) const {
  BridgeRequest req;
  double out;
  req.logp = &out;
  evaluate(x, req);
  return out;
}

void GmmBridge::evaluate(const double* x, const BridgeRequest& req) const {
  const int d = d_;
  const std::size_t nc = comps_.size();
  Eigen::Map<const Vec> xv(x, d);

  thread_local std::vector<double> us_buf, logs_buf;
  us_buf.resize(nc * d);
  logs_buf.resize(nc);

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < nc; ++c) {
    const Component& k = comps_[c];
    Eigen::Map<Vec> u(us_buf.data() + c * d, d);
    const Vec r = xv - k.m;
    u.noalias() = k.cov_inv * r;
    logs_buf[c] = k.log_w - 0.5 * r.dot(u);
    best = std::max(best, logs_buf[c]);
  }
  double wsum = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    logs_buf[c] = std::exp(logs_buf[c] - best);
    wsum += logs_buf[c];
  }
  if (req.logp) *req.logp = best + std::log(wsum);

  if (!req.b && !req.s && !req.v && !req.eta0 && !req.eta1 && !req.etaz && !req.div_b && !req.div_s)
    return;

  thread_local std::vector<double> work;
  work.resize(3 * d);
  Eigen::Map<Vec> sbar(work.data(), d);
  Eigen::Map<Vec> bbar(work.data() + d, d);
  Eigen::Map<Vec> tmp(work.data() + 2 * d, d);
  sbar.setZero();
  bbar.setZero();

  const bool need_b = req.b || req.v || req.div_b;
  for (std::size_t c = 0; c < nc; ++c) {
    const double w = logs_buf[c] / wsum;
    Eigen::Map<const Vec> u(us_buf.data() + c * d, d);
    sbar -= w * u;
    if (need_b) {
      const Component& k = comps_[c];
      tmp.noalias() = 0.5 * (k.dcov * u);
      tmp += k.dm;
      bbar += w * tmp;
    }
  }

  if (req.s) Eigen::Map<Vec>(req.s, d) = sbar;
  if (req.b) Eigen::Map<Vec>(req.b, d) = bbar;
  if (req.v) Eigen::Map<Vec>(req.v, d) = bbar + gg_ * sbar;
  if (req.etaz) Eigen::Map<Vec>(req.etaz, d) = -gamma_ * sbar;

  if (req.eta0 || req.eta1) {
    if (req.eta0) Eigen::Map<Vec>(req.eta0, d).setZero();
    if (req.eta1) Eigen::Map<Vec>(req.eta1, d).setZero();
    for (std::size_t c = 0; c < nc; ++c) {
      const double w = logs_buf[c] / wsum;
      const Component& k = comps_[c];
      Eigen::Map<const Vec> u(us_buf.data() + c * d, d);
      if (req.eta0) {
        tmp.noalias() = alpha_ * (mix0_->covs[k.i] * u);
        tmp += mix0_->means.row(k.i).transpose();
        Eigen::Map<Vec>(req.eta0, d) += w * tmp;
      }
      if (req.eta1) {
        tmp.noalias() = beta_ * (mix1_->covs[k.j] * u);
        tmp += mix1_->means.row(k.j).transpose();
        Eigen::Map<Vec>(req.eta1, d) += w * tmp;
      }
    }
  }

  if (req.div_b || req.div_s) {
    double div_b = 0.0, div_s = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      const double w = logs_buf[c] / wsum;
      const Component& k = comps_[c];
      Eigen::Map<const Vec> u(us_buf.data() + c * d, d);
      // grad log w_c = s_c - sbar with s_c = -u
      if (req.div_b) {
        tmp.noalias() = 0.5 * (k.dcov * u);
        tmp += k.dm;
        div_b += w * ((-u - sbar).dot(tmp) + 0.5 * k.tr_dcov_cinv);
      }
      if (req.div_s) div_s += w * ((-u - sbar).dot(-u) - k.tr_cinv);
    }
    if (req.div_b) *req.div_b = div_b;
    if (req.div_s) *req.div_s = div_s;
  }
}

// ---------------------------------------------------------------------------

MomentTrajectory linear_sde_moments(const Vec& mean_init, const SquareMat& cov_init,
                                    const GaussianMixture& g0, const GaussianMixture& g1,
                                    const Schedule& sched, double eps,
                                    const std::vector<double>& t_grid, const Vec* drift_offset) {
  if (g0.modes() != 1 || g1.modes() != 1)
    throw Error("linear_sde_moments: single-Gaussian endpoints required");
  const int d = g0.dim();
  const Vec m0 = g0.means.row(0).transpose();
  const Vec m1 = g1.means.row(0).transpose();
  const SquareMat& c0 = g0.covs[0];
  const SquareMat& c1 = g1.covs[0];

  auto bridge_mean = [&](double t) { return (sched.alpha(t) * m0 + sched.beta(t) * m1).eval(); };
  auto bridge_cov = [&](double t) {
    const double a = sched.alpha(t), b = sched.beta(t), g = sched.gamma(t);
    SquareMat c = a * a * c0 + b * b * c1;
    c.diagonal().array() += g * g;
    return c;
  };
  auto bridge_dmean = [&](double t) {
    Vec dm = sched.d_beta(t) * m1;
    const double da = sched.d_alpha(t);
    if (std::isfinite(da))
      dm += da * m0;
    else if (m0.cwiseAbs().maxCoeff() != 0.0)
      throw NonFinite("linear_sde_moments: singular d_alpha with nonzero base mean");
    return dm;
  };
  auto amat = [&](double t) {
    SquareMat dc = 2.0 * sched.aa(t) * c0 + 2.0 * sched.bb(t) * c1;
    dc.diagonal().array() += 2.0 * sched.gg(t);
    SquareMat half = 0.5 * dc;
    half.diagonal().array() -= eps;
    return (half * bridge_cov(t).inverse()).eval();
  };

  struct State {
    Vec m;
    SquareMat c;
  };
  auto deriv = [&](double t, const State& s) {
    const SquareMat a = amat(t);
    State ds;
    ds.m = bridge_dmean(t) + a * (s.m - bridge_mean(t));
    if (drift_offset) ds.m += *drift_offset;
    ds.c = a * s.c + s.c * a.transpose();
    ds.c.diagonal().array() += 2.0 * eps;
    return ds;
  };

  MomentTrajectory out;
  out.t = t_grid;
  out.mean.reserve(t_grid.size());
  out.cov.reserve(t_grid.size());
  State s{mean_init, cov_init};
  out.mean.push_back(s.m);
  out.cov.push_back(s.c);
  const int substeps = 8;
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double h = (t_grid[k] - t_grid[k - 1]) / substeps;
    double t = t_grid[k - 1];
    for (int ss = 0; ss < substeps; ++ss) {
      const State k1 = deriv(t, s);
      const State k2 = deriv(t + 0.5 * h, {s.m + 0.5 * h * k1.m, s.c + 0.5 * h * k1.c});
      const State k3 = deriv(t + 0.5 * h, {s.m + 0.5 * h * k2.m, s.c + 0.5 * h * k2.c});
      const State k4 = deriv(t + h, {s.m + h * k3.m, s.c + h * k3.c});
      s.m += (h / 6.0) * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
      s.c += (h / 6.0) * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c);
      t += h;
    }
    out.mean.push_back(s.m);
    out.cov.push_back(s.c);
    (void)d;
  }
  return out;
}

// ---------------------------------------------------------------------------

PointMassDrift::PointMassDrift(Vec x0, const GaussianMixture& target, double a, bool plateau,
                               double delta)
    : x0_(std::move(x0)), target_(&target), a_(a), plateau_(plateau), delta_(delta) {
  if (a <= 0.0) throw Error("point-mass drift: a must be positive");
  if (x0_.size() != target.dim()) throw Error("point-mass drift: dimension mismatch");
}

PointMassDrift::Coeffs PointMassDrift::coeffs(double t) const {
  if (!plateau_) return {t, 1.0, 2.0 * a_ * t * (1.0 - t)};
  if (t <= delta_) return {0.0, 0.0, 2.0 * a_ * t * (1.0 - t)};
  const double u = (t - delta_) / (1.0 - delta_);
  return {u, 1.0 / (1.0 - delta_), 2.0 * a_ * t * (1.0 - t)};
}

PointMassDrift::Frozen PointMassDrift::freeze(double t) const {
  const int d = dim();
  const GaussianMixture& g = *target_;
  Frozen fr;
  fr.t = t;
  if (t < 1e-12) {
    fr.at_origin = true;
    return fr;
  }
  const Coeffs cf = coeffs(t);
  fr.beta = cf.beta;
  fr.dbeta = cf.dbeta;
  fr.gg = a_ * (1.0 - 2.0 * t);  // gamma*dgamma for gamma^2 = 2a t(1-t)
  fr.dalpha = plateau_ && t <= delta_ ? 0.0 : -cf.dbeta;
  const int n = g.modes();
  fr.mu.resize(n);
  fr.cov_inv.resize(n);
  fr.log_w.resize(n);
  for (int j = 0; j < n; ++j) {
    SquareMat cov = cf.beta * cf.beta * g.covs[j];
    cov.diagonal().array() += cf.gamma2;
    Eigen::LLT<SquareMat> llt(cov);
    if (llt.info() != Eigen::Success) throw SingularCovariance("point-mass bridge covariance");
    const SquareMat l = llt.matrixL();
    double log_norm = -0.5 * kLog2Pi * d;
    for (int k = 0; k < d; ++k) log_norm -= std::log(l(k, k));
    fr.mu[j] = (1.0 - cf.beta) * x0_ + cf.beta * g.means.row(j).transpose();
    fr.cov_inv[j] = llt.solve(SquareMat::Identity(d, d));
    fr.log_w[j] = g.log_weights[j] + log_norm;
  }
  return fr;
}

void PointMassDrift::fields(const Frozen& fr, const double* x, double* u, double* b,
                            double* s) const {
  const int d = dim();
  const GaussianMixture& g = *target_;

  if (fr.at_origin) {
    if (u) Eigen::Map<Vec>(u, d) = plateau_ ? Vec(Vec::Zero(d)) : Vec(g.mean() - x0_);
    if (b || s) throw NonFinite("point-mass bridge: b and s are singular at t=0");
    return;
  }

  Eigen::Map<const Vec> xv(x, d);
  const int n = g.modes();
  thread_local std::vector<double> buf;
  buf.resize(static_cast<std::size_t>(n) * (d + 1));
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    Eigen::Map<Vec> uj(buf.data() + static_cast<std::size_t>(j) * d, d);
    const Vec r = xv - fr.mu[j];
    uj.noalias() = fr.cov_inv[j] * r;
    buf[static_cast<std::size_t>(n) * d + j] = fr.log_w[j] - 0.5 * r.dot(uj);
    best = std::max(best, buf[static_cast<std::size_t>(n) * d + j]);
  }
  double wsum = 0.0;
  for (int j = 0; j < n; ++j) {
    double& lw = buf[static_cast<std::size_t>(n) * d + j];
    lw = std::exp(lw - best);
    wsum += lw;
  }

  Vec uacc = Vec::Zero(d), bacc = Vec::Zero(d), sacc = Vec::Zero(d);
  for (int j = 0; j < n; ++j) {
    const double w = buf[static_cast<std::size_t>(n) * d + j] / wsum;
    Eigen::Map<const Vec> uj(buf.data() + static_cast<std::size_t>(j) * d, d);
    const Vec mj = g.means.row(j).transpose();
    if (u || b) {
      const Vec cju = g.covs[j] * uj;
      if (u) uacc += w * (fr.dalpha * x0_ + fr.dbeta * (mj + fr.beta * cju) - 2.0 * a_ * fr.t * uj);
      if (b) bacc += w * (fr.dalpha * x0_ + fr.dbeta * mj + fr.beta * fr.dbeta * cju + fr.gg * uj);
    }
    if (s) sacc -= w * uj;
  }
  if (u) Eigen::Map<Vec>(u, d) = uacc;
  if (b) Eigen::Map<Vec>(b, d) = bacc;
  if (s) Eigen::Map<Vec>(s, d) = sacc;
}

void PointMassDrift::drift_u(double t, const double* x, double* out) const {
  fields(freeze(t), x, out, nullptr, nullptr);
}
void PointMassDrift::velocity_b(double t, const double* x, double* out) const {
  fields(freeze(t), x, nullptr, out, nullptr);
}
void PointMassDrift::score_s(double t, const double* x, double* out) const {
  fields(freeze(t), x, nullptr, nullptr, out);
}

}  // namespace si
