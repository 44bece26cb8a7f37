#pragma once

// Endpoint samplers, couplings, and interpolant draw batches
// x_t = alpha(t) x0 + beta(t) x1 + gamma(t) z with one-sided and mirror
// variants. Draw i is a pure function of (seed, i), so batches are
// reproducible under any partitioning.

#include <cstdint>
#include <memory>
#include <vector>

#include "si/gmm.hpp"
#include "si/rng.hpp"
#include "si/schedule.hpp"
#include "si/types.hpp"

namespace si {

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual int dim() const = 0;
  // draw `idx` under the stream space rooted at g; deterministic in (g, idx)
  virtual void sample(const rng::Philox& g, std::uint64_t idx, double* out) const = 0;
};

class MixtureSampler final : public Sampler {
 public:
  explicit MixtureSampler(GaussianMixture mix) : mix_(std::move(mix)) {}
  int dim() const override { return mix_.dim(); }
  void sample(const rng::Philox& g, std::uint64_t idx, double* out) const override {
    mix_.sample(g, idx, out);
  }
  const GaussianMixture& mixture() const { return mix_; }

 private:
  GaussianMixture mix_;
};

// rows drawn with replacement
class DatasetSampler final : public Sampler {
 public:
  explicit DatasetSampler(Mat rows);
  int dim() const override { return static_cast<int>(data_.cols()); }
  void sample(const rng::Philox& g, std::uint64_t idx, double* out) const override;
  const Mat& data() const { return data_; }

 private:
  Mat data_;
};

class PointMassSampler final : public Sampler {
 public:
  explicit PointMassSampler(Vec point) : point_(std::move(point)) {}
  int dim() const override { return static_cast<int>(point_.size()); }
  void sample(const rng::Philox&, std::uint64_t, double* out) const override {
    for (int k = 0; k < point_.size(); ++k) out[k] = point_[k];
  }

 private:
  Vec point_;
};

enum class CouplingMode { IndependentProduct, Paired };

struct Coupling {
  CouplingMode mode = CouplingMode::IndependentProduct;
  std::shared_ptr<const Sampler> source0, source1;
  std::shared_ptr<const Mat> pairs0, pairs1;  // aligned rows for Paired

  static Coupling independent(std::shared_ptr<const Sampler> s0,
                              std::shared_ptr<const Sampler> s1);
  static Coupling paired(Mat x0_rows, Mat x1_rows);
  int dim() const;
};

enum class TimeMode { UniformT, StratifiedT, FixedT };

struct TimeSpec {
  TimeMode mode = TimeMode::UniformT;
  double t_fixed = 0.0;
  double t_lo = 0.0;
  double t_hi = 1.0;

  static TimeSpec uniform(double lo = 0.0, double hi = 1.0) {
    return {TimeMode::UniformT, 0.0, lo, hi};
  }
  static TimeSpec stratified(double lo = 0.0, double hi = 1.0) {
    return {TimeMode::StratifiedT, 0.0, lo, hi};
  }
  static TimeSpec fixed(double t) { return {TimeMode::FixedT, t, t, t}; }
};

struct DrawBatch {
  Schedule schedule;
  Vec t;                                 // n
  Mat x0, x1, z, xt;                     // n x d
  std::vector<std::uint64_t> stream_id;  // n
  bool antithetic = false;
  double t_lo = 0.0, t_hi = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(t.size()); }
  int dim() const { return static_cast<int>(xt.cols()); }
};

// two-sided draws through a coupling
DrawBatch draw_batch(const Schedule& sched, const Coupling& coupling, std::size_t n,
                     const TimeSpec& time, bool antithetic, std::uint64_t seed);

// one-sided: x_t = alpha z + beta x1 (z stored in both the x0 and z slots)
DrawBatch draw_one_sided(const Schedule& sched, const Sampler& target, std::size_t n,
                         const TimeSpec& time, bool antithetic, std::uint64_t seed);

// mirror: x_t = alpha x1 + gamma z (the mirrored endpoint is stored in both
// the x0 and x1 slots so d/dt coefficients line up with the schedule)
DrawBatch draw_mirror(const Schedule& sched, const Sampler& target, std::size_t n,
                      const TimeSpec& time, bool antithetic, std::uint64_t seed);

}  // namespace si
