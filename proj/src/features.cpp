#include "si/features.hpp"

#include <algorithm>
#include <cmath>

#include "si/errors.hpp"
#include "si/rng.hpp"
#include "si/simd/kernels.hpp"

namespace si {

namespace {
constexpr int kBlock = 256;

// median heuristic over the x block (the time coordinate is excluded),
// with the usual 1/sqrt(2) kernel-width convention
double median_pairwise_distance(const Mat& u) {
  const Eigen::Index n = std::min<Eigen::Index>(u.rows(), 512);
  const Eigen::Index stride = std::max<Eigen::Index>(1, u.rows() / n);
  const Eigen::Index xcols = u.cols() - 1;
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d2.push_back(
          (u.row(i * stride).tail(xcols) - u.row(j * stride).tail(xcols)).squaredNorm());
  if (d2.empty()) return 1.0;
  std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
  return std::sqrt(0.5 * d2[d2.size() / 2]);
}

}  // namespace

FeatureMap FeatureMap::build(FeatureMapConfig cfg, int x_dim, const Mat* inputs_tx) {
  FeatureMap fm;
  fm.x_dim_ = x_dim;
  const int din = x_dim + 1;

  if (cfg.bandwidth <= 0.0) {
    if (!inputs_tx) throw Error("feature map: bandwidth heuristic needs sample inputs");
    cfg.bandwidth = std::max(1e-8, median_pairwise_distance(*inputs_tx));
  }

  fm.total_ = cfg.count;
  if (cfg.include_bias) {
    fm.bias_col_ = fm.total_;
    fm.total_ += 1;
  }
  if (cfg.include_linear) {
    fm.linear_col_ = fm.total_;
    fm.total_ += din;
  }
  fm.scale_ = std::sqrt(2.0 / std::max(1, cfg.count));

  if (cfg.kind == FeatureKind::RandomFourier) {
    fm.freq_t_.resize(din, cfg.count);
    fm.phases_.resize(cfg.count);
    const rng::Philox g{rng::mix_seed(cfg.seed, 0xfea7), 0};
    for (int f = 0; f < cfg.count; ++f) {
      std::vector<double> w(din);
      rng::normal_fill({g.seed, static_cast<std::uint64_t>(f)}, 0, w);
      const double bw = cfg.bandwidth * cfg.scale_cycle[f % cfg.scale_cycle.size()];
      for (int k = 0; k < din; ++k) fm.freq_t_(k, f) = w[k] / bw;
      fm.phases_[f] =
          2.0 * M_PI * rng::uniform({g.seed, static_cast<std::uint64_t>(f)}, 1 + (din + 1) / 2);
    }
  } else {
    if (!inputs_tx || inputs_tx->rows() == 0) throw Error("rbf features need sample inputs");
    fm.centers_.resize(cfg.count, din);
    const rng::Philox g{rng::mix_seed(cfg.seed, 0xce27), 0};
    for (int f = 0; f < cfg.count; ++f) {
      const auto r =
          rng::uniform_index({g.seed, static_cast<std::uint64_t>(f)}, 0, inputs_tx->rows());
      fm.centers_.row(f) = inputs_tx->row(static_cast<Eigen::Index>(r));
    }
    fm.freq_t_ = fm.centers_.transpose();  // gemm layout
    fm.phases_.resize(cfg.count);
    for (int f = 0; f < cfg.count; ++f) fm.phases_[f] = fm.centers_.row(f).squaredNorm();
  }
  fm.cfg_ = cfg;
  return fm;
}

void FeatureMap::set_params(Mat freq_t, Vec phases) {
  freq_t_ = std::move(freq_t);
  phases_ = std::move(phases);
  if (cfg_.kind == FeatureKind::RBFGrid) centers_ = freq_t_.transpose();
}

void FeatureMap::build_inputs(const Vec& t, const Mat& x, Mat& u) const {
  const Eigen::Index n = x.rows();
  u.resize(n, input_dim());
  if (t.size() == 1)
    u.col(0).setConstant(cfg_.tau_scale * t[0]);
  else
    u.col(0) = cfg_.tau_scale * t;
  u.rightCols(x_dim_) = x;
}

void FeatureMap::rff_block(const Mat& u, double* phi, std::size_t ld, double* sin_out) const {
  const auto& K = simd::kernels();
  const Eigen::Index n = u.rows();
  const int F = cfg_.count;
  thread_local std::vector<double> theta;
  theta.resize(static_cast<std::size_t>(n) * F);
  for (Eigen::Index i = 0; i < n; ++i)
    std::copy(phases_.data(), phases_.data() + F, theta.data() + i * F);
  K.gemm_nn(theta.data(), u.data(), freq_t_.data(), n, F, input_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    K.cos_sin(theta.data() + i * F, phi + i * ld, sin_out ? sin_out + i * F : nullptr, F);
    double* row = phi + i * ld;
    for (int f = 0; f < F; ++f) row[f] *= scale_;
  }
}

void FeatureMap::rbf_block(const Mat& u, double* phi, std::size_t ld) const {
  const auto& K = simd::kernels();
  const Eigen::Index n = u.rows();
  const int F = cfg_.count;
  const double inv2h2 = 1.0 / (2.0 * cfg_.bandwidth * cfg_.bandwidth);
  thread_local std::vector<double> q;
  q.resize(static_cast<std::size_t>(n) * F);
  // |u - c|^2 = |u|^2 + |c|^2 - 2 u.c
  for (Eigen::Index i = 0; i < n; ++i) {
    const double un = u.row(i).squaredNorm();
    double* row = q.data() + i * F;
    for (int f = 0; f < F; ++f) row[f] = 0.5 * (un + phases_[f]);
  }
  K.gemm_nn(q.data(), (-u).eval().data(), freq_t_.data(), n, F, input_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    double* row = q.data() + i * F;
    double* out = phi + i * ld;
    for (int f = 0; f < F; ++f) out[f] = -2.0 * inv2h2 * row[f];
    K.exp_inplace(out, F);
  }
}

void FeatureMap::features(const Vec& t, const Mat& x, Mat& phi) const {
  const Eigen::Index n = x.rows();
  phi.resize(n, total_);
  Mat u;
  for (Eigen::Index lo = 0; lo < n; lo += kBlock) {
    const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - lo);
    Vec tb;
    if (t.size() == 1) {
      tb = t;
    } else {
      tb = t.segment(lo, len);
    }
    build_inputs(tb, x.middleRows(lo, len), u);
    double* base = phi.data() + lo * total_;
    if (cfg_.kind == FeatureKind::RandomFourier)
      rff_block(u, base, total_, nullptr);
    else
      rbf_block(u, base, total_);
    for (Eigen::Index i = 0; i < len; ++i) {
      double* row = base + i * total_;
      if (bias_col_ >= 0) row[bias_col_] = 1.0;
      if (linear_col_ >= 0)
        for (int k = 0; k < input_dim(); ++k) row[linear_col_ + k] = u(i, k);
    }
  }
}

void FeatureMap::features_fixed_t(double t, const Mat& x, Mat& phi) const {
  Vec tv(1);
  tv[0] = t;
  features(tv, x, phi);
}

void FeatureMap::divergence_dot(const Vec& t, const Mat& x, const Mat& weights, Vec& out) const {
  const auto& K = simd::kernels();
  const Eigen::Index n = x.rows();
  const int F = cfg_.count;
  const int din = input_dim();
  out.resize(n);

  double lin_term = 0.0;
  if (linear_col_ >= 0)
    for (int k = 0; k < x_dim_; ++k) lin_term += weights(k, linear_col_ + 1 + k);

  if (cfg_.kind == FeatureKind::RandomFourier) {
    // c_f = sum_k W(k, f) * freq(k+1, f)
    Vec cf = Vec::Zero(F);
    for (int k = 0; k < x_dim_; ++k)
      cf += (weights.row(k).head(F).array() * freq_t_.row(k + 1).array()).matrix().transpose();

    Mat u;
    thread_local std::vector<double> cosb, sinb;
    for (Eigen::Index lo = 0; lo < n; lo += kBlock) {
      const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - lo);
      Vec tb = (t.size() == 1) ? t : Vec(t.segment(lo, len));
      build_inputs(tb, x.middleRows(lo, len), u);
      cosb.resize(static_cast<std::size_t>(len) * F);
      sinb.resize(static_cast<std::size_t>(len) * F);
      // recompute phases; cos block values are not needed, sin is
      thread_local std::vector<double> theta;
      theta.resize(static_cast<std::size_t>(len) * F);
      for (Eigen::Index i = 0; i < len; ++i)
        std::copy(phases_.data(), phases_.data() + F, theta.data() + i * F);
      K.gemm_nn(theta.data(), u.data(), freq_t_.data(), len, F, din);
      for (Eigen::Index i = 0; i < len; ++i) {
        K.cos_sin(theta.data() + i * F, cosb.data(), sinb.data() + i * F, F);
        out[lo + i] = -scale_ * K.dot(sinb.data() + i * F, cf.data(), F) + lin_term;
      }
    }
  } else {
    const double inv_h2 = 1.0 / (cfg_.bandwidth * cfg_.bandwidth);
    Vec wc = Vec::Zero(F);
    for (int k = 0; k < x_dim_; ++k)
      wc += (weights.row(k).head(F).array() * centers_.col(k + 1).transpose().array())
                .matrix()
                .transpose();
    Mat u, phi;
    for (Eigen::Index lo = 0; lo < n; lo += kBlock) {
      const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - lo);
      Vec tb = (t.size() == 1) ? t : Vec(t.segment(lo, len));
      build_inputs(tb, x.middleRows(lo, len), u);
      phi.resize(len, F);
      rbf_block(u, phi.data(), F);
      for (Eigen::Index i = 0; i < len; ++i) {
        double acc = 0.0;
        for (int k = 0; k < x_dim_; ++k)
          acc += u(i, k + 1) * K.dot(phi.row(i).data(), weights.row(k).head(F).eval().data(), F);
        acc -= K.dot(phi.row(i).data(), wc.data(), F);
        out[lo + i] = -inv_h2 * acc + lin_term;
      }
    }
  }
}

void FeatureMap::grad_sum(const Vec& t, const Mat& x, Mat& accum) const {
  const auto& K = simd::kernels();
  const Eigen::Index n = x.rows();
  const int F = cfg_.count;
  if (accum.rows() != x_dim_ || accum.cols() != total_) {
    accum.resize(x_dim_, total_);
    accum.setZero();
  }

  if (cfg_.kind == FeatureKind::RandomFourier) {
    Vec colsum = Vec::Zero(F);
    Mat u;
    thread_local std::vector<double> theta, sinb, cosb;
    for (Eigen::Index lo = 0; lo < n; lo += kBlock) {
      const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - lo);
      Vec tb = (t.size() == 1) ? t : Vec(t.segment(lo, len));
      build_inputs(tb, x.middleRows(lo, len), u);
      theta.resize(static_cast<std::size_t>(len) * F);
      sinb.resize(F);
      cosb.resize(F);
      for (Eigen::Index i = 0; i < len; ++i)
        std::copy(phases_.data(), phases_.data() + F, theta.data() + i * F);
      K.gemm_nn(theta.data(), u.data(), freq_t_.data(), len, F, input_dim());
      for (Eigen::Index i = 0; i < len; ++i) {
        K.cos_sin(theta.data() + i * F, cosb.data(), sinb.data(), F);
        for (int f = 0; f < F; ++f) colsum[f] += sinb[f];
      }
    }
    for (int k = 0; k < x_dim_; ++k)
      accum.row(k).head(F) -=
          scale_ * (colsum.array() * freq_t_.row(k + 1).transpose().array()).matrix().transpose();
    if (linear_col_ >= 0)
      for (int k = 0; k < x_dim_; ++k) accum(k, linear_col_ + 1 + k) += static_cast<double>(n);
  } else {
    const double inv_h2 = 1.0 / (cfg_.bandwidth * cfg_.bandwidth);
    Mat u, phi;
    for (Eigen::Index lo = 0; lo < n; lo += kBlock) {
      const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - lo);
      Vec tb = (t.size() == 1) ? t : Vec(t.segment(lo, len));
      build_inputs(tb, x.middleRows(lo, len), u);
      phi.resize(len, F);
      rbf_block(u, phi.data(), F);
      for (Eigen::Index i = 0; i < len; ++i)
        for (int k = 0; k < x_dim_; ++k)
          accum.row(k).head(F) -=
              inv_h2 *
              (phi.row(i).array() * (u(i, k + 1) - centers_.col(k + 1).transpose().array()))
                  .matrix();
    }
    if (linear_col_ >= 0)
      for (int k = 0; k < x_dim_; ++k) accum(k, linear_col_ + 1 + k) += static_cast<double>(n);
  }
}

}  // namespace si
