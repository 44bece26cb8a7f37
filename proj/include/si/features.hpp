#pragma once

// Linear-in-features function class over (t, x): random Fourier features
// (cosine block) or Gaussian bumps at data-drawn centers, plus optional
// bias and raw-coordinate columns. Time enters as an extra coordinate
// scaled by tau_scale. Feature evaluation and the gradient contractions
// needed for divergences run through the vector kernels.

#include <cstdint>
#include <memory>
#include <vector>

#include "si/types.hpp"

namespace si {

enum class FeatureKind { RandomFourier, RBFGrid };

struct FeatureMapConfig {
  FeatureKind kind = FeatureKind::RandomFourier;
  int count = 1024;        // random features (cos or bump block)
  double bandwidth = 0.0;  // <= 0: median heuristic over sample inputs
  double tau_scale = 1.0;
  bool include_bias = true;
  bool include_linear = false;
  std::uint64_t seed = 1;
  // per-feature bandwidth multipliers, cycled over the cosine block
  std::vector<double> scale_cycle{1.0, 0.5};
};

class FeatureMap {
 public:
  // `inputs_tx` (rows of (tau_scale*t, x)) feeds the bandwidth heuristic and
  // the RBF centers; required when bandwidth <= 0 or kind == RBFGrid
  static FeatureMap build(FeatureMapConfig cfg, int x_dim, const Mat* inputs_tx = nullptr);

  int x_dim() const { return x_dim_; }
  int input_dim() const { return x_dim_ + 1; }
  int feature_count() const { return total_; }
  int random_count() const { return cfg_.count; }
  double bandwidth() const { return cfg_.bandwidth; }
  const FeatureMapConfig& config() const { return cfg_; }

  void features(const Vec& t, const Mat& x, Mat& phi) const;
  void features_fixed_t(double t, const Mat& x, Mat& phi) const;

  // out[i] = sum_k sum_f W(k,f) dphi_f/dx_k at row i; W is d x feature_count
  void divergence_dot(const Vec& t, const Mat& x, const Mat& weights, Vec& out) const;
  // accum (d x feature_count) += sum_i dphi_f/dx_k
  void grad_sum(const Vec& t, const Mat& x, Mat& accum) const;

  // raw parameter access (serialization)
  const Mat& param_matrix() const { return freq_t_; }  // (d+1) x F: frequencies or centers^T
  const Vec& phases() const { return phases_; }
  void set_params(Mat freq_t, Vec phases);

 private:
  void build_inputs(const Vec& t, const Mat& x, Mat& u) const;
  void rff_block(const Mat& u, double* phi, std::size_t ld, double* sin_out) const;
  void rbf_block(const Mat& u, double* phi, std::size_t ld) const;

  FeatureMapConfig cfg_;
  int x_dim_ = 0;
  int total_ = 0;
  int bias_col_ = -1;
  int linear_col_ = -1;
  double scale_ = 1.0;  // sqrt(2/F) for cosine features
  Mat freq_t_;          // (d+1) x F, row-major (gemm layout)
  Vec phases_;          // F (RFF) ; |c_f|^2 cache (RBF)
  Mat centers_;         // F x (d+1) (RBF only)
};

}  // namespace si
