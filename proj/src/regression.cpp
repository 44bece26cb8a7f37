#include "si/regression.hpp"

#include <cmath>

#include "si/errors.hpp"
#include "si/simd/kernels.hpp"
#include "si/stats.hpp"

namespace si {

namespace {

constexpr double kTimeCapLo = 1e-4;
constexpr double kTimeCapHi = 1.0 - 1e-4;
constexpr double kCapSlack = 1e-12;

bool needs_capped_times(TargetTag tag) { return tag == TargetTag::S; }

void check_s_preconditions(const DrawBatch& draws) {
  if (!draws.antithetic)
    throw SingularGamma("score objective requires antithetic draw pairs");
  if (draws.t_lo < kTimeCapLo - kCapSlack || draws.t_hi > kTimeCapHi + kCapSlack)
    throw SingularGamma("score objective requires a time window inside [1e-4, 1-1e-4]");
}

double gamma_dot_coeff(const Schedule& s, double t) {
  if (s.kind == ScheduleKind::OneSided) return 0.0;
  if (!s.d_gamma_singular) return s.d_gamma(t);
  const double g = s.gamma(t);
  if (g < 1e-12) return 0.0;  // gamma z == 0 there anyway
  return s.gg(t) / g;
}

}  // namespace

const char* target_tag_name(TargetTag tag) {
  switch (tag) {
    case TargetTag::B:
      return "b";
    case TargetTag::V:
      return "v";
    case TargetTag::S:
      return "s";
    case TargetTag::EtaZ:
      return "eta_z";
    case TargetTag::Eta0:
      return "eta_0";
    case TargetTag::Eta1:
      return "eta_1";
    case TargetTag::BRec:
      return "b_rec";
    case TargetTag::UDiff:
      return "u_diff";
  }
  return "?";
}

TargetTag parse_target_tag(const std::string& name) {
  for (TargetTag t : {TargetTag::B, TargetTag::V, TargetTag::S, TargetTag::EtaZ, TargetTag::Eta0,
                      TargetTag::Eta1, TargetTag::BRec, TargetTag::UDiff})
    if (name == target_tag_name(t)) return t;
  throw ConfigError("unknown objective '" + name + "'");
}

void regression_targets(TargetTag objective, const DrawBatch& draws, Eigen::Index lo,
                        Eigen::Index len, double drift_a, Mat& y) {
  const Schedule& s = draws.schedule;
  const int d = draws.dim();
  y.resize(len, d);
  for (Eigen::Index r = 0; r < len; ++r) {
    const Eigen::Index i = lo + r;
    const double t = draws.t[i];
    switch (objective) {
      case TargetTag::B:
      case TargetTag::BRec: {
        const double cg = gamma_dot_coeff(s, t);
        y.row(r) = s.d_alpha(t) * draws.x0.row(i) + s.d_beta(t) * draws.x1.row(i) +
                   cg * draws.z.row(i);
        break;
      }
      case TargetTag::V:
        y.row(r) = s.d_alpha(t) * draws.x0.row(i) + s.d_beta(t) * draws.x1.row(i);
        break;
      case TargetTag::S: {
        const double g = s.kind == ScheduleKind::OneSided ? s.alpha(t) : s.gamma(t);
        y.row(r) = (-1.0 / g) * draws.z.row(i);
        break;
      }
      case TargetTag::EtaZ:
        y.row(r) = draws.z.row(i);
        break;
      case TargetTag::Eta0:
        y.row(r) = draws.x0.row(i);
        break;
      case TargetTag::Eta1:
        y.row(r) = draws.x1.row(i);
        break;
      case TargetTag::UDiff: {
        const double c = s.gamma(t) / (1.0 - t);
        y.row(r) = s.d_alpha(t) * draws.x0.row(i) + s.d_beta(t) * draws.x1.row(i) -
                   c * draws.z.row(i);
        break;
      }
    }
  }
}

Mat feature_inputs_sample(const DrawBatch& draws, std::size_t max_rows) {
  const std::size_t n = draws.size();
  const std::size_t take = std::min(max_rows, n);
  const std::size_t stride = std::max<std::size_t>(1, n / take);
  Mat u(static_cast<Eigen::Index>(take), draws.dim() + 1);
  for (std::size_t r = 0; r < take; ++r) {
    const std::size_t i = r * stride;
    u(r, 0) = draws.t[i];
    u.row(r).tail(draws.dim()) = draws.xt.row(i);
  }
  return u;
}

void FeatureModel::finalize() { weights_t = weights.transpose(); }

void FeatureModel::eval_fixed_t(double t, const Mat& x, Mat& out) const {
  Mat phi;
  fmap->features_fixed_t(t, x, phi);
  out.resize(x.rows(), dim());
  out.setZero();
  simd::kernels().gemm_nn(out.data(), phi.data(), weights_t.data(), x.rows(), dim(),
                          fmap->feature_count());
}

void FeatureModel::eval_each(const Vec& t, const Mat& x, Mat& out) const {
  Mat phi;
  fmap->features(t, x, phi);
  out.resize(x.rows(), dim());
  out.setZero();
  simd::kernels().gemm_nn(out.data(), phi.data(), weights_t.data(), x.rows(), dim(),
                          fmap->feature_count());
}

void FeatureModel::divergence_each(const Vec& t, const Mat& x, Vec& out) const {
  fmap->divergence_dot(t, x, weights, out);
}

namespace {

std::vector<FeatureModel> solve_models(SquareMat& gram, const std::vector<Mat>& rhs,
                                       const std::vector<TargetTag>& objectives,
                                       std::shared_ptr<const FeatureMap> fmap, double lambda_total,
                                       double ridge_lambda) {
  const int ftot = fmap->feature_count();
  double jitter = std::max(lambda_total, 1e-300);
  gram.diagonal().array() += lambda_total;

  Eigen::LLT<SquareMat> llt;
  bool ok = false;
  for (int attempt = 0; attempt < 4; ++attempt) {
    llt.compute(gram);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
      ok = true;
      break;
    }
    const double extra = jitter * 9.0;  // brings total to 10x
    gram.diagonal().array() += extra;
    jitter *= 10.0;
  }
  if (!ok) throw IllConditioned("gram matrix condition exceeds 1e12 after regularization");

  std::vector<FeatureModel> out;
  out.reserve(objectives.size());
  for (std::size_t k = 0; k < objectives.size(); ++k) {
    FeatureModel m;
    m.fmap = fmap;
    m.tag = objectives[k];
    m.ridge_lambda = ridge_lambda;
    m.weights_t = llt.solve(rhs[k].transpose());
    m.weights = m.weights_t.transpose();
    (void)ftot;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

std::vector<FeatureModel> fit_multi(const std::vector<TargetTag>& objectives,
                                    const DrawBatch& draws,
                                    std::shared_ptr<const FeatureMap> fmap,
                                    const FitOptions& opts) {
  const auto& K = simd::kernels();
  const Eigen::Index n = static_cast<Eigen::Index>(draws.size());
  const int d = draws.dim();
  const int ftot = fmap->feature_count();

  for (TargetTag tag : objectives)
    if (needs_capped_times(tag)) check_s_preconditions(draws);

  Mat gram_rm = Mat::Zero(ftot, ftot);
  std::vector<Mat> rhs(objectives.size(), Mat::Zero(d, ftot));

  Mat phi, y;
  for (Eigen::Index lo = 0; lo < n; lo += opts.block) {
    const Eigen::Index len = std::min<Eigen::Index>(opts.block, n - lo);
    const Vec tb = draws.t.segment(lo, len);
    fmap->features(tb, draws.xt.middleRows(lo, len), phi);
    K.syrk_upper(gram_rm.data(), ftot, phi.data(), len);
    for (std::size_t k = 0; k < objectives.size(); ++k) {
      regression_targets(objectives[k], draws, lo, len, opts.drift_a, y);
      K.rank1_accum(rhs[k].data(), y.data(), phi.data(), len, d, ftot);
    }
  }

  SquareMat gram = gram_rm.selfadjointView<Eigen::Upper>();
  auto models = solve_models(gram, rhs, objectives, fmap, opts.ridge_lambda * n,
                             opts.ridge_lambda);
  return models;
}

FeatureModel fit(TargetTag objective, const DrawBatch& draws,
                 std::shared_ptr<const FeatureMap> fmap, const FitOptions& opts) {
  return fit_multi({objective}, draws, std::move(fmap), opts)[0];
}

FeatureModel fit_score_matching(const DrawBatch& draws, std::shared_ptr<const FeatureMap> fmap,
                                const FitOptions& opts) {
  const auto& K = simd::kernels();
  const Eigen::Index n = static_cast<Eigen::Index>(draws.size());
  const int d = draws.dim();
  const int ftot = fmap->feature_count();

  Mat gram_rm = Mat::Zero(ftot, ftot);
  Mat grad_accum = Mat::Zero(d, ftot);

  Mat phi;
  for (Eigen::Index lo = 0; lo < n; lo += opts.block) {
    const Eigen::Index len = std::min<Eigen::Index>(opts.block, n - lo);
    const Vec tb = draws.t.segment(lo, len);
    fmap->features(tb, draws.xt.middleRows(lo, len), phi);
    K.syrk_upper(gram_rm.data(), ftot, phi.data(), len);
    fmap->grad_sum(tb, draws.xt.middleRows(lo, len), grad_accum);
  }

  // minimize sum |W phi|^2 + 2 div(W phi):  W = -(sum grads) (Gram + reg)^{-1}
  SquareMat gram = gram_rm.selfadjointView<Eigen::Upper>();
  std::vector<Mat> rhs{Mat(-grad_accum)};
  auto models = solve_models(gram, rhs, {TargetTag::S}, fmap, opts.ridge_lambda * n,
                             opts.ridge_lambda);
  return std::move(models[0]);
}

std::vector<double> loss_integrand(TargetTag objective, const DriftField& field,
                                   const DrawBatch& draws, double drift_a) {
  const Eigen::Index n = static_cast<Eigen::Index>(draws.size());
  const int d = draws.dim();
  std::vector<double> vals(static_cast<std::size_t>(n));
  constexpr Eigen::Index kBlock = 1024;
  Mat y, f;
  for (Eigen::Index lo = 0; lo < n; lo += kBlock) {
    const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - lo);
    regression_targets(objective, draws, lo, len, drift_a, y);
    // evaluate the field at each (t_i, x_i)
    if (const auto* ff = dynamic_cast<const FeatureField*>(&field)) {
      const Vec tb = draws.t.segment(lo, len);
      ff->model().eval_each(tb, draws.xt.middleRows(lo, len), f);
    } else {
      f.resize(len, d);
      for (Eigen::Index r = 0; r < len; ++r)
        field.eval_point(draws.t[lo + r], draws.xt.row(lo + r).data(), f.row(r).data());
    }
    for (Eigen::Index r = 0; r < len; ++r)
      vals[static_cast<std::size_t>(lo + r)] =
          0.5 * f.row(r).squaredNorm() - f.row(r).dot(y.row(r));
  }
  return vals;
}

LossReport empirical_loss(TargetTag objective, const DriftField& field, const DrawBatch& draws,
                          double drift_a) {
  const auto vals = loss_integrand(objective, field, draws, drift_a);
  LossReport rep;
  rep.objective = objective;
  rep.n_samples = draws.size();
  rep.t_lo = draws.t_lo;
  rep.t_hi = draws.t_hi;
  rep.antithetic = draws.antithetic;
  rep.value = mean(vals);
  return rep;
}

}  // namespace si
