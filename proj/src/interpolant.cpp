#include "si/interpolant.hpp"

#include <omp.h>

#include "si/errors.hpp"
#include "si/simd/kernels.hpp"

namespace si {

namespace {
// role tags separating the rng streams of one batch
constexpr std::uint64_t kRoleTime = 0x7431;
constexpr std::uint64_t kRoleX0 = 0x7830;
constexpr std::uint64_t kRoleX1 = 0x7831;
constexpr std::uint64_t kRoleZ = 0x7a00;
constexpr std::uint64_t kRolePair = 0x7072;

double draw_time(const TimeSpec& ts, std::uint64_t seed, std::uint64_t idx, std::size_t n) {
  switch (ts.mode) {
    case TimeMode::FixedT:
      return ts.t_fixed;
    case TimeMode::UniformT: {
      const double u = rng::uniform({rng::mix_seed(seed, kRoleTime), idx}, 0);
      return ts.t_lo + (ts.t_hi - ts.t_lo) * u;
    }
    case TimeMode::StratifiedT: {
      const double u = rng::uniform({rng::mix_seed(seed, kRoleTime), idx}, 0);
      const double bin = (static_cast<double>(idx) + u) / static_cast<double>(n);
      return ts.t_lo + (ts.t_hi - ts.t_lo) * bin;
    }
  }
  return ts.t_fixed;
}

void alloc(DrawBatch& b, std::size_t n, int d) {
  b.t.resize(n);
  b.x0.resize(n, d);
  b.x1.resize(n, d);
  b.z.resize(n, d);
  b.xt.resize(n, d);
  b.stream_id.resize(n);
}

void check_antithetic(std::size_t n, bool antithetic) {
  if (antithetic && n % 2 != 0) throw Error("antithetic draws need an even batch size");
}

}  // namespace

DatasetSampler::DatasetSampler(Mat rows) : data_(std::move(rows)) {
  if (data_.rows() == 0) throw EmptySource("dataset sampler has no rows");
}

void DatasetSampler::sample(const rng::Philox& g, std::uint64_t idx, double* out) const {
  const rng::Philox p{g.seed, g.stream + idx};
  const auto r = rng::uniform_index(p, 0, static_cast<std::uint64_t>(data_.rows()));
  for (int k = 0; k < data_.cols(); ++k) out[k] = data_(static_cast<Eigen::Index>(r), k);
}

Coupling Coupling::independent(std::shared_ptr<const Sampler> s0,
                               std::shared_ptr<const Sampler> s1) {
  if (!s0 || !s1) throw Error("coupling: null sampler");
  if (s0->dim() != s1->dim()) throw Error("coupling: dimension mismatch");
  Coupling c;
  c.mode = CouplingMode::IndependentProduct;
  c.source0 = std::move(s0);
  c.source1 = std::move(s1);
  return c;
}

Coupling Coupling::paired(Mat x0_rows, Mat x1_rows) {
  if (x0_rows.rows() != x1_rows.rows()) throw Error("paired coupling: row count mismatch");
  if (x0_rows.rows() == 0) throw EmptySource("paired coupling has no rows");
  Coupling c;
  c.mode = CouplingMode::Paired;
  c.pairs0 = std::make_shared<Mat>(std::move(x0_rows));
  c.pairs1 = std::make_shared<Mat>(std::move(x1_rows));
  return c;
}

int Coupling::dim() const {
  return mode == CouplingMode::IndependentProduct ? source0->dim()
                                                  : static_cast<int>(pairs0->cols());
}

DrawBatch draw_batch(const Schedule& sched, const Coupling& coupling, std::size_t n,
                     const TimeSpec& time, bool antithetic, std::uint64_t seed) {
  check_antithetic(n, antithetic);
  const int d = coupling.dim();
  DrawBatch b;
  b.schedule = sched;
  b.antithetic = antithetic;
  b.t_lo = time.t_lo;
  b.t_hi = time.t_hi;
  alloc(b, n, d);

  const std::size_t groups = antithetic ? n / 2 : n;
  const rng::Philox gz{rng::mix_seed(seed, kRoleZ), 0};
  const rng::Philox gx0{rng::mix_seed(seed, kRoleX0), 0};
  const rng::Philox gx1{rng::mix_seed(seed, kRoleX1), 0};
  const rng::Philox gpair{rng::mix_seed(seed, kRolePair), 0};

#pragma omp parallel for schedule(static)
  for (std::size_t gidx = 0; gidx < groups; ++gidx) {
    const std::size_t i = antithetic ? 2 * gidx : gidx;
    const double t = draw_time(time, seed, gidx, groups);
    b.t[i] = t;
    b.stream_id[i] = gidx;

    double* x0 = b.x0.row(i).data();
    double* x1 = b.x1.row(i).data();
    double* z = b.z.row(i).data();
    if (coupling.mode == CouplingMode::IndependentProduct) {
      coupling.source0->sample(gx0, gidx, x0);
      coupling.source1->sample(gx1, gidx, x1);
    } else {
      const auto r = rng::uniform_index({gpair.seed, gidx}, 0,
                                        static_cast<std::uint64_t>(coupling.pairs0->rows()));
      for (int k = 0; k < d; ++k) {
        x0[k] = (*coupling.pairs0)(static_cast<Eigen::Index>(r), k);
        x1[k] = (*coupling.pairs1)(static_cast<Eigen::Index>(r), k);
      }
    }
    rng::normal_fill({gz.seed, gidx}, 0, {z, static_cast<std::size_t>(d)});

    const double a = sched.alpha(t), be = sched.beta(t), ga = sched.gamma(t);
    simd::kernels().combine3(a, x0, be, x1, ga, z, b.xt.row(i).data(), d);

    if (antithetic) {
      const std::size_t j = i + 1;
      b.t[j] = t;
      b.stream_id[j] = gidx;
      b.x0.row(j) = b.x0.row(i);
      b.x1.row(j) = b.x1.row(i);
      b.z.row(j) = -b.z.row(i);
      simd::kernels().combine3(a, x0, be, x1, -ga, z, b.xt.row(j).data(), d);
    }
  }
  return b;
}

DrawBatch draw_one_sided(const Schedule& sched, const Sampler& target, std::size_t n,
                         const TimeSpec& time, bool antithetic, std::uint64_t seed) {
  if (sched.kind != ScheduleKind::OneSided) throw Error("draw_one_sided needs a one-sided schedule");
  check_antithetic(n, antithetic);
  const int d = target.dim();
  DrawBatch b;
  b.schedule = sched;
  b.antithetic = antithetic;
  b.t_lo = time.t_lo;
  b.t_hi = time.t_hi;
  alloc(b, n, d);

  const std::size_t groups = antithetic ? n / 2 : n;
  const rng::Philox gz{rng::mix_seed(seed, kRoleZ), 0};
  const rng::Philox gx1{rng::mix_seed(seed, kRoleX1), 0};

#pragma omp parallel for schedule(static)
  for (std::size_t gidx = 0; gidx < groups; ++gidx) {
    const std::size_t i = antithetic ? 2 * gidx : gidx;
    const double t = draw_time(time, seed, gidx, groups);
    b.t[i] = t;
    b.stream_id[i] = gidx;

    double* x1 = b.x1.row(i).data();
    double* z = b.z.row(i).data();
    target.sample(gx1, gidx, x1);
    rng::normal_fill({gz.seed, gidx}, 0, {z, static_cast<std::size_t>(d)});
    b.x0.row(i) = b.z.row(i);  // the latent is the x0 channel

    const double a = sched.alpha(t), be = sched.beta(t);
    simd::kernels().combine3(a, z, be, x1, 0.0, z, b.xt.row(i).data(), d);

    if (antithetic) {
      const std::size_t j = i + 1;
      b.t[j] = t;
      b.stream_id[j] = gidx;
      b.x1.row(j) = b.x1.row(i);
      b.z.row(j) = -b.z.row(i);
      b.x0.row(j) = b.z.row(j);
      simd::kernels().combine3(-a, z, be, x1, 0.0, z, b.xt.row(j).data(), d);
    }
  }
  return b;
}

DrawBatch draw_mirror(const Schedule& sched, const Sampler& target, std::size_t n,
                      const TimeSpec& time, bool antithetic, std::uint64_t seed) {
  if (sched.kind != ScheduleKind::Mirror) throw Error("draw_mirror needs a mirror schedule");
  check_antithetic(n, antithetic);
  const int d = target.dim();
  DrawBatch b;
  b.schedule = sched;
  b.antithetic = antithetic;
  b.t_lo = time.t_lo;
  b.t_hi = time.t_hi;
  alloc(b, n, d);

  const std::size_t groups = antithetic ? n / 2 : n;
  const rng::Philox gz{rng::mix_seed(seed, kRoleZ), 0};
  const rng::Philox gx1{rng::mix_seed(seed, kRoleX1), 0};

#pragma omp parallel for schedule(static)
  for (std::size_t gidx = 0; gidx < groups; ++gidx) {
    const std::size_t i = antithetic ? 2 * gidx : gidx;
    const double t = draw_time(time, seed, gidx, groups);
    b.t[i] = t;
    b.stream_id[i] = gidx;

    double* x1 = b.x1.row(i).data();
    double* z = b.z.row(i).data();
    target.sample(gx1, gidx, x1);
    rng::normal_fill({gz.seed, gidx}, 0, {z, static_cast<std::size_t>(d)});
    b.x0.row(i) = b.x1.row(i);  // mirrored endpoint fills both slots

    const double a = sched.alpha(t), ga = sched.gamma(t);
    simd::kernels().combine3(a, x1, 0.0, x1, ga, z, b.xt.row(i).data(), d);

    if (antithetic) {
      const std::size_t j = i + 1;
      b.t[j] = t;
      b.stream_id[j] = gidx;
      b.x1.row(j) = b.x1.row(i);
      b.x0.row(j) = b.x1.row(i);
      b.z.row(j) = -b.z.row(i);
      simd::kernels().combine3(a, x1, 0.0, x1, -ga, z, b.xt.row(j).data(), d);
    }
  }
  return b;
}

}  // namespace si
