#pragma once

// Uniform evaluable interface over analytic GMM fields, learned feature
// models, and composites b + eps(t) s. Evaluation is batched at a common
// time; divergence is exact where the backing object supports it and a
// centered finite difference (h = 1e-5) otherwise.

#include <functional>
#include <memory>
#include <string>

#include "si/gmm.hpp"
#include "si/schedule.hpp"
#include "si/types.hpp"

namespace si {

enum class FieldProvenance { AnalyticGMM, Learned, Composite };

class DriftField {
 public:
  virtual ~DriftField() = default;
  virtual int dim() const = 0;
  virtual void eval(double t, const Mat& x, Mat& out) const = 0;
  virtual void divergence(double t, const Mat& x, Vec& out) const;  // FD fallback
  virtual bool has_exact_divergence() const { return false; }
  virtual FieldProvenance provenance() const { return FieldProvenance::Composite; }

  void eval_point(double t, const double* x, double* out) const;
  double divergence_point(double t, const double* x) const;
};

using DriftPtr = std::shared_ptr<const DriftField>;

struct EpsSchedule {
  enum class Kind { Constant, Ramp, AlphaProportional };
  Kind kind = Kind::Constant;
  double value = 0.0;
  double t_on = 0.0, t_off = 1.0, edge = 0.05;
  std::function<double(double)> alpha;  // for AlphaProportional

  double operator()(double t) const;
  bool zero_everywhere() const { return kind == Kind::Constant && value == 0.0; }

  static EpsSchedule constant(double eps);
  static EpsSchedule ramp(double eps, double t_on, double t_off, double edge = 0.05);
  static EpsSchedule alpha_proportional(double c, const Schedule& sched);
};

// which analytic bridge quantity a GmmField exposes
enum class GmmQuantity { B, V, S, Eta0, Eta1, EtaZ };

class GmmField final : public DriftField {
 public:
  GmmField(GaussianMixture mix0, GaussianMixture mix1, Schedule sched, GmmQuantity q);
  int dim() const override { return mix1_.dim(); }
  void eval(double t, const Mat& x, Mat& out) const override;
  void divergence(double t, const Mat& x, Vec& out) const override;
  bool has_exact_divergence() const override {
    return q_ == GmmQuantity::B || q_ == GmmQuantity::S;
  }
  FieldProvenance provenance() const override { return FieldProvenance::AnalyticGMM; }

 private:
  GaussianMixture mix0_, mix1_;
  Schedule sched_;
  GmmQuantity q_;
};

// c_b * b + c_s(t) * s with exact divergence; covers b_F = b + eps s and
// b_B = b - eps s for analytic endpoints
class GmmCompositeField final : public DriftField {
 public:
  GmmCompositeField(GaussianMixture mix0, GaussianMixture mix1, Schedule sched, EpsSchedule eps,
                    double score_sign);
  int dim() const override { return mix1_.dim(); }
  void eval(double t, const Mat& x, Mat& out) const override;
  void divergence(double t, const Mat& x, Vec& out) const override;
  bool has_exact_divergence() const override { return true; }
  FieldProvenance provenance() const override { return FieldProvenance::AnalyticGMM; }

 private:
  GaussianMixture mix0_, mix1_;
  Schedule sched_;
  EpsSchedule eps_;
  double score_sign_;
};

// generic linear combination sum_i c_i(t) f_i(t,x)
class CombinationField final : public DriftField {
 public:
  using Coef = std::function<double(double)>;
  CombinationField(std::vector<std::pair<Coef, DriftPtr>> terms);
  int dim() const override;
  void eval(double t, const Mat& x, Mat& out) const override;
  void divergence(double t, const Mat& x, Vec& out) const override;
  bool has_exact_divergence() const override;

 private:
  std::vector<std::pair<Coef, DriftPtr>> terms_;
};

// point-evaluator backed field, mostly for tests and trivial drifts
class LambdaField final : public DriftField {
 public:
  using Fn = std::function<void(double, const double*, double*)>;
  LambdaField(int d, Fn fn) : d_(d), fn_(std::move(fn)) {}
  int dim() const override { return d_; }
  void eval(double t, const Mat& x, Mat& out) const override {
    out.resize(x.rows(), d_);
    for (Eigen::Index i = 0; i < x.rows(); ++i) fn_(t, x.row(i).data(), out.row(i).data());
  }

 private:
  int d_;
  Fn fn_;
};

class PointMassField final : public DriftField {
 public:
  explicit PointMassField(std::shared_ptr<const PointMassDrift> pm) : pm_(std::move(pm)) {}
  int dim() const override { return pm_->dim(); }
  void eval(double t, const Mat& x, Mat& out) const override;

 private:
  std::shared_ptr<const PointMassDrift> pm_;
};

// forward/backward FPE drift b +- eps s from two generic fields; throws
// MissingScore when eps is nonzero anywhere and no score is supplied
DriftPtr make_fpe_drift(DriftPtr b, DriftPtr s, const EpsSchedule& eps, double score_sign);

// one-sided velocity assembled from a denoiser field:
// b = (dbeta/beta) (x - alpha etaz) + dalpha * etaz, supplemented at t=0
class OneSidedDenoiserVelocity final : public DriftField {
 public:
  OneSidedDenoiserVelocity(DriftPtr etaz, Schedule sched, Vec target_mean);
  int dim() const override { return etaz_->dim(); }
  void eval(double t, const Mat& x, Mat& out) const override;

 private:
  DriftPtr etaz_;
  Schedule sched_;
  Vec target_mean_;
};

// one-sided velocity from score and eta1 fields: b = -(alpha dalpha) s + dbeta eta1;
// stays finite for the variance-preserving diffusion schedule at t = 1
class OneSidedScoreVelocity final : public DriftField {
 public:
  OneSidedScoreVelocity(DriftPtr score, DriftPtr eta1, Schedule sched);
  int dim() const override { return score_->dim(); }
  void eval(double t, const Mat& x, Mat& out) const override;

 private:
  DriftPtr score_, eta1_;
  Schedule sched_;
};

// score from a denoiser model: s = -etaz / gamma (or / alpha when one-sided)
class DenoiserScoreField final : public DriftField {
 public:
  DenoiserScoreField(DriftPtr etaz, Schedule sched);
  int dim() const override { return etaz_->dim(); }
  void eval(double t, const Mat& x, Mat& out) const override;

 private:
  DriftPtr etaz_;
  Schedule sched_;
};

}  // namespace si
