#pragma once

// Evaluation metrics: Gaussian KDE with Scott's bandwidth rule, the
// control-variate Monte-Carlo KL estimator, log-density error statistics,
// and the 2D checkerboard target (eight alternating unit squares of the
// 4x4 grid on [-2,2]^2, density 1/8 on the support).

#include <cstdint>
#include <functional>
#include <vector>

#include "si/interpolant.hpp"
#include "si/rng.hpp"
#include "si/types.hpp"

namespace si {

class KdeModel {
 public:
  // rows = samples, cols = (projected) dimensions
  static KdeModel fit(const Mat& samples);

  double log_eval(const double* q) const;
  void log_eval_batch(const Mat& q, Vec& out) const;
  int dim() const { return static_cast<int>(cols_.size()); }
  const Vec& bandwidth() const { return h_; }

 private:
  std::vector<std::vector<double>> cols_;  // column storage for the kernels
  std::vector<const double*> col_ptrs_;
  Vec h_;
  Vec inv2h2_;
  double log_norm_ = 0.0;
  std::size_t n_ = 0;
};

using LogDensityFn = std::function<double(const double*)>;

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// mean over x ~ p of [log p - log q - (q/p - 1)]; nonnegative up to noise
KlEstimate kl_control_variate(const LogDensityFn& log_p, const LogDensityFn& log_q,
                              const Mat& eval_samples_from_p, int batches = 100);

struct ErrorStats {
  double mean_abs = 0.0;
  double var_abs = 0.0;
};

ErrorStats logdensity_error_stats(const LogDensityFn& model_logp, const LogDensityFn& true_logp,
                                  const Mat& eval_points);

// floor applied to log densities off the support
constexpr double kLogFloor = -745.0;

struct Checkerboard {
  static bool on_support(double x, double y);
  static double logp(const double* xy);
  static void sample(const rng::Philox& g, std::uint64_t idx, double* out);
};

class CheckerboardSampler final : public Sampler {
 public:
  int dim() const override { return 2; }
  void sample(const rng::Philox& g, std::uint64_t idx, double* out) const override {
    Checkerboard::sample(g, idx, out);
  }
};

}  // namespace si
