#include "si/metrics.hpp"

#include <cmath>

#include "si/errors.hpp"
#include "si/simd/kernels.hpp"
#include "si/stats.hpp"

namespace si {

KdeModel KdeModel::fit(const Mat& samples) {
  const Eigen::Index n = samples.rows();
  const int k = static_cast<int>(samples.cols());
  if (n < 2) throw Error("kde: need at least two samples");

  KdeModel m;
  m.n_ = static_cast<std::size_t>(n);
  m.cols_.resize(k);
  m.h_.resize(k);
  m.inv2h2_.resize(k);
  const double scott = std::pow(static_cast<double>(n), -1.0 / (k + 4));
  m.log_norm_ = -0.5 * k * std::log(2.0 * M_PI) - std::log(static_cast<double>(n));
  for (int j = 0; j < k; ++j) {
    m.cols_[j].resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) m.cols_[j][static_cast<std::size_t>(i)] = samples(i, j);
    const double mu = samples.col(j).mean();
    const double sd = std::sqrt((samples.col(j).array() - mu).square().sum() / (n - 1));
    m.h_[j] = std::max(sd * scott, 1e-12);
    m.inv2h2_[j] = 1.0 / (2.0 * m.h_[j] * m.h_[j]);
    m.log_norm_ -= std::log(m.h_[j]);
  }
  m.col_ptrs_.resize(k);
  for (int j = 0; j < k; ++j) m.col_ptrs_[j] = m.cols_[j].data();
  return m;
}

double KdeModel::log_eval(const double* q) const {
  const double s = simd::kernels().kde_sum(col_ptrs_.data(), col_ptrs_.size(), n_, q,
                                           inv2h2_.data());
  if (s <= 0.0) return kLogFloor;
  return std::max(kLogFloor, log_norm_ + std::log(s));
}

void KdeModel::log_eval_batch(const Mat& q, Vec& out) const {
  out.resize(q.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < q.rows(); ++i) out[i] = log_eval(q.row(i).data());
}

KlEstimate kl_control_variate(const LogDensityFn& log_p, const LogDensityFn& log_q,
                              const Mat& eval_samples_from_p, int batches) {
  const Eigen::Index n = eval_samples_from_p.rows();
  std::vector<double> terms(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lp = log_p(eval_samples_from_p.row(i).data());
    const double lq = log_q(eval_samples_from_p.row(i).data());
    terms[static_cast<std::size_t>(i)] = (lp - lq) - (std::exp(lq - lp) - 1.0);
  }
  KlEstimate out;
  out.value = mean(terms);
  const int nb = std::min<int>(batches, static_cast<int>(n));
  if (nb >= 2) {
    std::vector<double> bm(static_cast<std::size_t>(nb));
    const Eigen::Index per = n / nb;
    for (int b = 0; b < nb; ++b) {
      double acc = 0.0;
      for (Eigen::Index i = b * per; i < (b + 1) * per; ++i) acc += terms[i];
      bm[static_cast<std::size_t>(b)] = acc / per;
    }
    out.std_error = stderr_of_mean(bm);
  }
  return out;
}

ErrorStats logdensity_error_stats(const LogDensityFn& model_logp, const LogDensityFn& true_logp,
                                  const Mat& eval_points) {
  const Eigen::Index n = eval_points.rows();
  std::vector<double> a(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* q = eval_points.row(i).data();
    a[static_cast<std::size_t>(i)] = std::abs(model_logp(q) - true_logp(q));
  }
  ErrorStats st;
  st.mean_abs = mean(a);
  st.var_abs = variance(a);
  return st;
}

bool Checkerboard::on_support(double x, double y) {
  if (x < -2.0 || x >= 2.0 || y < -2.0 || y >= 2.0) return false;
  const int i = static_cast<int>(std::floor(x + 2.0));
  const int j = static_cast<int>(std::floor(y + 2.0));
  return ((i + j) & 1) == 0;
}

double Checkerboard::logp(const double* xy) {
  return on_support(xy[0], xy[1]) ? -std::log(8.0) : kLogFloor;
}

void Checkerboard::sample(const rng::Philox& g, std::uint64_t idx, double* out) {
  const rng::Philox p{g.seed, g.stream + idx};
  const auto sq = rng::uniform_index(p, 0, 8);
  // enumerate the 8 black squares of the 4x4 grid
  std::uint64_t count = 0;
  int si = 0, sj = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (((i + j) & 1) == 0) {
        if (count == sq) {
          si = i;
          sj = j;
        }
        ++count;
      }
  // uniform() is (0,1]; flip to [0,1) so samples stay inside their square
  const double ux = 1.0 - rng::uniform(p, 1);
  const double uy = 1.0 - rng::uniform(p, 2);
  out[0] = -2.0 + si + ux;
  out[1] = -2.0 + sj + uy;
}

}  // namespace si
