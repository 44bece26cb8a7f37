#pragma once

// Generative dynamics: batched probability-flow ODE (fixed-step RK4 or
// adaptive Dormand-Prince 5(4)), forward/backward SDEs (Euler-Maruyama or
// the stochastic Heun predictor-corrector), the denoiser iteration, and
// the point-mass diffusive sampler. SDE noise comes from counter-based
// streams keyed (seed, path, step), so trajectories are reproducible under
// any partitioning of the batch.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "si/drift.hpp"
#include "si/gmm.hpp"
#include "si/schedule.hpp"
#include "si/types.hpp"

namespace si {

enum class OdeMethod { RK4, DoPri };
enum class SdeMethod { EulerMaruyama, HeunStochastic };
enum class Direction { Forward, Backward };

struct OdeOptions {
  OdeMethod method = OdeMethod::DoPri;
  double dt = 1e-3;  // RK4 step
  double rtol = 1e-6;
  double atol = 1e-8;
  bool store_path = false;
  long max_steps = 2000000;
};

struct SdeOptions {
  SdeMethod method = SdeMethod::EulerMaruyama;
  int steps = 1000;
  std::uint64_t seed = 0;
  double t0 = 0.0, tf = 1.0;  // window in generative time
  bool store_path = false;
};

struct TrajectoryBatch {
  std::vector<double> times;  // at minimum start and end
  std::vector<Mat> states;    // aligned with times
  Direction direction = Direction::Forward;
  std::string integrator;
  std::uint64_t seed = 0;

  const Mat& endpoint() const { return states.back(); }
};

// generic adaptive Dormand-Prince 5(4) on a flat state vector
struct DopriResult {
  Vec y;
  long steps = 0;
};
DopriResult dopri5(const std::function<void(double, const Vec&, Vec&)>& rhs, Vec y0, double t0,
                   double tf, double rtol, double atol, long max_steps = 2000000);

TrajectoryBatch integrate_ode(const DriftField& b, const Mat& x0, double t0, double tf,
                              const OdeOptions& opts = {});

// drift must already be the FPE drift (b + eps s forward, b - eps s backward);
// Backward runs the time-reversed process forward with drift -field(1-t, .)
TrajectoryBatch integrate_sde(const DriftField& drift, const EpsSchedule& eps, const Mat& init,
                              Direction dir, const SdeOptions& opts);

// X_{j+1} = (beta_{j+1}/beta_j) X_j + (alpha_{j+1} - alpha_j beta_{j+1}/beta_j) etaz(t_j, X_j)
Mat denoiser_iterate(const DriftField& etaz, const Schedule& sched, const Mat& z0, int steps);

// conditional-mean jump from t_from to t = 1
Mat final_denoise(const DriftField& etaz, const Schedule& sched, const Mat& x, double t_from);

TrajectoryBatch sample_point_mass(const PointMassDrift& pm, std::size_t n, int steps,
                                  std::uint64_t seed, SdeMethod method = SdeMethod::EulerMaruyama);

}  // namespace si
