#include "si/rectify.hpp"

#include <cmath>

#include "si/errors.hpp"
#include "si/rng.hpp"

namespace si {

PairTable build_endpoint_map(const DriftField& b, std::size_t n, std::uint64_t seed,
                             const OdeOptions& opts) {
  const int d = b.dim();
  PairTable tab;
  tab.z.resize(n, d);
  const rng::Philox g{rng::mix_seed(seed, 0x7265), 0};
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i)
    rng::normal_fill({g.seed, i}, 0, {tab.z.row(i).data(), static_cast<std::size_t>(d)});
  tab.x1 = integrate_ode(b, tab.z, 0.0, 1.0, opts).endpoint();
  return tab;
}

DrawBatch build_rectified_draws(const PairTable& table, const Schedule& sched, std::size_t n,
                                const TimeSpec& time, std::uint64_t seed) {
  if (sched.kind != ScheduleKind::OneSided)
    throw Error("rectified draws use a one-sided schedule");
  if (table.z.rows() == 0) throw EmptySource("empty endpoint table");
  Coupling pairs = Coupling::paired(table.z, table.x1);
  DrawBatch b = draw_batch(sched, pairs, n, time, /*antithetic=*/false, seed);
  // the latent channel is z itself; make that explicit for the target builder
  b.z = b.x0;
  return b;
}

FeatureModel fit_rectified(const DrawBatch& draws, std::shared_ptr<const FeatureMap> fmap,
                           const FitOptions& opts) {
  return fit(TargetTag::BRec, draws, std::move(fmap), opts);
}

double verify_straightness(const DriftField& b_rec, const PairTable& test_pairs,
                           const Schedule& sched, int steps) {
  OdeOptions opts;
  opts.method = OdeMethod::RK4;
  opts.dt = 1.0 / steps;
  opts.store_path = true;
  const auto traj = integrate_ode(b_rec, test_pairs.z, 0.0, 1.0, opts);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    const Mat ref = sched.alpha(t) * test_pairs.z + sched.beta(t) * test_pairs.x1;
    const double dev = (traj.states[k] - ref).rowwise().norm().maxCoeff();
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace si
