#include "si/drift.hpp"

#include <cmath>

#include "si/errors.hpp"

namespace si {

void DriftField::divergence(double t, const Mat& x, Vec& out) const {
  const double h = 1e-5;
  const int d = dim();
  const Eigen::Index n = x.rows();
  out.resize(n);
  out.setZero();
  Mat shifted = x;
  Mat fp, fm;
  for (int k = 0; k < d; ++k) {
    shifted.col(k).array() += h;
    eval(t, shifted, fp);
    shifted.col(k).array() -= 2.0 * h;
    eval(t, shifted, fm);
    shifted.col(k) = x.col(k);
    out += (fp.col(k) - fm.col(k)) / (2.0 * h);
  }
}

void DriftField::eval_point(double t, const double* x, double* out) const {
  Mat xi(1, dim());
  for (int k = 0; k < dim(); ++k) xi(0, k) = x[k];
  Mat o;
  eval(t, xi, o);
  for (int k = 0; k < dim(); ++k) out[k] = o(0, k);
}

double DriftField::divergence_point(double t, const double* x) const {
  Mat xi(1, dim());
  for (int k = 0; k < dim(); ++k) xi(0, k) = x[k];
  Vec o;
  divergence(t, xi, o);
  return o[0];
}

double EpsSchedule::operator()(double t) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Ramp: {
      if (t >= t_on && t <= t_off) return value;
      if (t < t_on) {
        const double lo = std::max(0.0, t_on - edge);
        if (t <= lo || t_on <= lo) return 0.0;
        return value * (t - lo) / (t_on - lo);
      }
      const double hi = std::min(1.0, t_off + edge);
      if (t >= hi || t_off >= hi) return 0.0;
      return value * (hi - t) / (hi - t_off);
    }
    case Kind::AlphaProportional:
      return value * std::max(0.0, alpha(t));
  }
  return 0.0;
}

EpsSchedule EpsSchedule::constant(double eps) {
  EpsSchedule e;
  e.kind = Kind::Constant;
  e.value = eps;
  return e;
}

EpsSchedule EpsSchedule::ramp(double eps, double t_on, double t_off, double edge) {
  EpsSchedule e;
  e.kind = Kind::Ramp;
  e.value = eps;
  e.t_on = t_on;
  e.t_off = t_off;
  e.edge = edge;
  return e;
}

EpsSchedule EpsSchedule::alpha_proportional(double c, const Schedule& sched) {
  EpsSchedule e;
  e.kind = Kind::AlphaProportional;
  e.value = c;
  e.alpha = sched.alpha_fn;
  return e;
}

// ---------------------------------------------------------------------------

GmmField::GmmField(GaussianMixture mix0, GaussianMixture mix1, Schedule sched, GmmQuantity q)
    : mix0_(std::move(mix0)), mix1_(std::move(mix1)), sched_(std::move(sched)), q_(q) {}

void GmmField::eval(double t, const Mat& x, Mat& out) const {
  const GmmBridge bridge(mix0_, mix1_, sched_, t);
  const Eigen::Index n = x.rows();
  out.resize(n, dim());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    BridgeRequest req;
    double* o = out.row(i).data();
    switch (q_) {
      case GmmQuantity::B:
        req.b = o;
        break;
      case GmmQuantity::V:
        req.v = o;
        break;
      case GmmQuantity::S:
        req.s = o;
        break;
      case GmmQuantity::Eta0:
        req.eta0 = o;
        break;
      case GmmQuantity::Eta1:
        req.eta1 = o;
        break;
      case GmmQuantity::EtaZ:
        req.etaz = o;
        break;
    }
    bridge.evaluate(x.row(i).data(), req);
  }
}

void GmmField::divergence(double t, const Mat& x, Vec& out) const {
  if (!has_exact_divergence()) {
    DriftField::divergence(t, x, out);
    return;
  }
  const GmmBridge bridge(mix0_, mix1_, sched_, t);
  const Eigen::Index n = x.rows();
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    BridgeRequest req;
    if (q_ == GmmQuantity::B)
      req.div_b = &out[i];
    else
      req.div_s = &out[i];
    bridge.evaluate(x.row(i).data(), req);
  }
}

GmmCompositeField::GmmCompositeField(GaussianMixture mix0, GaussianMixture mix1, Schedule sched,
                                     EpsSchedule eps, double score_sign)
    : mix0_(std::move(mix0)),
      mix1_(std::move(mix1)),
      sched_(std::move(sched)),
      eps_(std::move(eps)),
      score_sign_(score_sign) {}

void GmmCompositeField::eval(double t, const Mat& x, Mat& out) const {
  const GmmBridge bridge(mix0_, mix1_, sched_, t);
  const double c = score_sign_ * eps_(t);
  const Eigen::Index n = x.rows();
  const int d = dim();
  out.resize(n, d);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec b(d), s(d);
    BridgeRequest req;
    req.b = b.data();
    req.s = s.data();
    bridge.evaluate(x.row(i).data(), req);
    out.row(i) = (b + c * s).transpose();
  }
}

void GmmCompositeField::divergence(double t, const Mat& x, Vec& out) const {
  const GmmBridge bridge(mix0_, mix1_, sched_, t);
  const double c = score_sign_ * eps_(t);
  const Eigen::Index n = x.rows();
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    double db, ds;
    BridgeRequest req;
    req.div_b = &db;
    req.div_s = &ds;
    bridge.evaluate(x.row(i).data(), req);
    out[i] = db + c * ds;
  }
}

CombinationField::CombinationField(std::vector<std::pair<Coef, DriftPtr>> terms)
    : terms_(std::move(terms)) {
  if (terms_.empty()) throw Error("combination field needs at least one term");
}

int CombinationField::dim() const { return terms_.front().second->dim(); }

void CombinationField::eval(double t, const Mat& x, Mat& out) const {
  out.resize(x.rows(), dim());
  out.setZero();
  Mat tmp;
  for (const auto& [coef, field] : terms_) {
    const double c = coef(t);
    if (c == 0.0) continue;
    field->eval(t, x, tmp);
    out += c * tmp;
  }
}

void CombinationField::divergence(double t, const Mat& x, Vec& out) const {
  if (!has_exact_divergence()) {
    DriftField::divergence(t, x, out);
    return;
  }
  out.resize(x.rows());
  out.setZero();
  Vec tmp;
  for (const auto& [coef, field] : terms_) {
    const double c = coef(t);
    if (c == 0.0) continue;
    field->divergence(t, x, tmp);
    out += c * tmp;
  }
}

bool CombinationField::has_exact_divergence() const {
  for (const auto& [coef, field] : terms_)
    if (!field->has_exact_divergence()) return false;
  return true;
}

void PointMassField::eval(double t, const Mat& x, Mat& out) const {
  const auto frozen = pm_->freeze(t);
  const Eigen::Index n = x.rows();
  out.resize(n, dim());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    pm_->fields(frozen, x.row(i).data(), out.row(i).data(), nullptr, nullptr);
}

DriftPtr make_fpe_drift(DriftPtr b, DriftPtr s, const EpsSchedule& eps, double score_sign) {
  if (eps.zero_everywhere()) return b;
  if (!s) throw MissingScore("nonzero diffusion requires a score field");
  std::vector<std::pair<CombinationField::Coef, DriftPtr>> terms;
  terms.emplace_back([](double) { return 1.0; }, std::move(b));
  terms.emplace_back([eps, score_sign](double t) { return score_sign * eps(t); }, std::move(s));
  return std::make_shared<CombinationField>(std::move(terms));
}

OneSidedDenoiserVelocity::OneSidedDenoiserVelocity(DriftPtr etaz, Schedule sched, Vec target_mean)
    : etaz_(std::move(etaz)), sched_(std::move(sched)), target_mean_(std::move(target_mean)) {}

void OneSidedDenoiserVelocity::eval(double t, const Mat& x, Mat& out) const {
  const double beta = sched_.beta(t);
  if (beta == 0.0) {
    // b(0, x) = dalpha(0) x + dbeta(0) E[x1]
    out = sched_.d_alpha(t) * x;
    out.rowwise() += sched_.d_beta(t) * target_mean_.transpose();
    return;
  }
  Mat ez;
  etaz_->eval(t, x, ez);
  const double da = sched_.d_alpha(t);
  const double db_over_b = sched_.d_beta(t) / beta;
  const double alpha = sched_.alpha(t);
  out = db_over_b * (x - alpha * ez) + da * ez;
}

OneSidedScoreVelocity::OneSidedScoreVelocity(DriftPtr score, DriftPtr eta1, Schedule sched)
    : score_(std::move(score)), eta1_(std::move(eta1)), sched_(std::move(sched)) {}

void OneSidedScoreVelocity::eval(double t, const Mat& x, Mat& out) const {
  Mat s, e1;
  score_->eval(t, x, s);
  eta1_->eval(t, x, e1);
  out = -sched_.aa(t) * s + sched_.d_beta(t) * e1;
}

DenoiserScoreField::DenoiserScoreField(DriftPtr etaz, Schedule sched)
    : etaz_(std::move(etaz)), sched_(std::move(sched)) {}

void DenoiserScoreField::eval(double t, const Mat& x, Mat& out) const {
  const double g =
      sched_.kind == ScheduleKind::OneSided ? sched_.alpha(t) : sched_.gamma(t);
  if (g <= 0.0) throw SingularGamma("denoiser-to-score conversion at a vanishing coefficient");
  etaz_->eval(t, x, out);
  out *= -1.0 / g;
}

}  // namespace si
