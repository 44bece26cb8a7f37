#pragma once

// Ridge regression of the quadratic transport objectives over a feature
// map: exact normal-equation solve with a streamed Gram matrix, multiple
// regression targets sharing one factorization, the divergence-based
// score-matching alternative, and empirical loss evaluation for any field.

#include <memory>
#include <vector>

#include "si/drift.hpp"
#include "si/features.hpp"
#include "si/interpolant.hpp"
#include "si/types.hpp"

namespace si {

enum class TargetTag { B, V, S, EtaZ, Eta0, Eta1, BRec, UDiff };

const char* target_tag_name(TargetTag tag);
TargetTag parse_target_tag(const std::string& name);

struct FeatureModel {
  std::shared_ptr<const FeatureMap> fmap;
  Mat weights;    // d x F_total
  Mat weights_t;  // F_total x d (apply layout)
  double ridge_lambda = 1e-6;
  TargetTag tag = TargetTag::B;
  std::uint64_t draw_seed = 0;

  int dim() const { return static_cast<int>(weights.rows()); }
  void eval_fixed_t(double t, const Mat& x, Mat& out) const;
  void eval_each(const Vec& t, const Mat& x, Mat& out) const;
  void divergence_each(const Vec& t, const Mat& x, Vec& out) const;
  void finalize();  // recompute weights_t after setting weights
};

// DriftField adapter
class FeatureField final : public DriftField {
 public:
  explicit FeatureField(FeatureModel model) : model_(std::move(model)) {}
  int dim() const override { return model_.dim(); }
  void eval(double t, const Mat& x, Mat& out) const override {
    model_.eval_fixed_t(t, x, out);
  }
  void divergence(double t, const Mat& x, Vec& out) const override {
    Vec tv(1);
    tv[0] = t;
    model_.divergence_each(tv, x, out);
  }
  bool has_exact_divergence() const override { return true; }
  FieldProvenance provenance() const override { return FieldProvenance::Learned; }
  const FeatureModel& model() const { return model_; }

 private:
  FeatureModel model_;
};

struct LossReport {
  TargetTag objective;
  double value = 0.0;
  std::size_t n_samples = 0;
  double t_lo = 0.0, t_hi = 1.0;
  bool antithetic = false;
};

struct FitOptions {
  double ridge_lambda = 1e-6;  // per-sample; the Gram gets lambda * n added
  int block = 256;
  double drift_a = 1.0;  // UDiff target: diffusion scale of the point-mass SDE
};

// one Gram factorization shared across all requested targets
std::vector<FeatureModel> fit_multi(const std::vector<TargetTag>& objectives,
                                    const DrawBatch& draws,
                                    std::shared_ptr<const FeatureMap> fmap,
                                    const FitOptions& opts = {});
FeatureModel fit(TargetTag objective, const DrawBatch& draws,
                 std::shared_ptr<const FeatureMap> fmap, const FitOptions& opts = {});

// Hyvarinen objective |s|^2 + 2 div s via exact feature divergences
FeatureModel fit_score_matching(const DrawBatch& draws, std::shared_ptr<const FeatureMap> fmap,
                                const FitOptions& opts = {});

// regression target rows for an objective (also the loss anchor)
void regression_targets(TargetTag objective, const DrawBatch& draws, Eigen::Index lo,
                        Eigen::Index len, double drift_a, Mat& y);

LossReport empirical_loss(TargetTag objective, const DriftField& field, const DrawBatch& draws,
                          double drift_a = 1.0);
// per-draw integrand values (variance studies)
std::vector<double> loss_integrand(TargetTag objective, const DriftField& field,
                                   const DrawBatch& draws, double drift_a = 1.0);

// builds the default feature inputs (tau t, x) from a subsample of draws
Mat feature_inputs_sample(const DrawBatch& draws, std::size_t max_rows = 2048);

}  // namespace si
