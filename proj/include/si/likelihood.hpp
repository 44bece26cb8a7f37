#pragma once

// Likelihood machinery: ODE change-of-variables log densities, the
// Feynman-Kac path-expectation density for the diffusive dynamics,
// cross-entropy estimators (exact ODE form and the Jensen upper bound for
// the SDE), and the KL bound with its optimal diffusion coefficient.

#include <cstdint>
#include <optional>

#include "si/drift.hpp"
#include "si/gmm.hpp"
#include "si/integrators.hpp"
#include "si/types.hpp"

namespace si {

struct LogDensityResult {
  double log_density = 0.0;
  double divergence_integral = 0.0;
  Vec endpoint;  // the transported point (ODE) or unused (MC)
  int n_paths = 0;
  double std_error = 0.0;
};

// Forward: log rho_hat(1, x) by transporting x back to t=0 and adding
// log rho0; Backward: log rho_hat(0, x) via the t=1 density.
LogDensityResult log_density_ode(const DriftField& b, const GaussianMixture& anchor,
                                 const double* x, Direction dir, const OdeOptions& opts = {});

struct FeynmanKacOptions {
  int n_paths = 10000;
  int steps = 500;
  std::uint64_t seed = 1;
  int jackknife_blocks = 20;
};

// rho_hat_F(1, x) (Forward) or rho_hat_B(0, x) (Backward) for the FPE with
// drifts b +- eps s; paths and divergence weights use the switched-role
// auxiliary SDE.
LogDensityResult density_feynman_kac(const DriftField& b, const DriftField& s, double eps,
                                     const GaussianMixture& anchor, const double* x, Direction dir,
                                     const FeynmanKacOptions& opts = {});

struct CrossEntropyResult {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// empirical cross-entropy of the transported model density against samples
CrossEntropyResult cross_entropy_ode(const DriftField& b, const GaussianMixture& anchor,
                                     const Mat& samples, Direction dir,
                                     const OdeOptions& opts = {});

struct SdeCrossEntropyResult {
  double jensen_bound = 0.0;
  double bound_std_error = 0.0;
  std::optional<double> log_mean_estimate;  // biased when divergences are estimated
  bool biased_inside_log = false;
  std::size_t n = 0;
};

struct SdeCrossEntropyOptions {
  int paths_per_sample = 8;
  int steps = 300;
  std::uint64_t seed = 2;
  bool with_log_mean = false;
};

SdeCrossEntropyResult cross_entropy_sde_bound(const DriftField& b, const DriftField& s, double eps,
                                              const GaussianMixture& anchor, const Mat& samples,
                                              Direction dir,
                                              const SdeCrossEntropyOptions& opts = {});

struct KlBound {
  double value = 0.0;
  bool gaps_clamped = false;   // negative MC gap estimates clamped to zero
  bool both_gaps_zero = false;
};

KlBound kl_bound(double loss_b_hat, double loss_b_min, double loss_s_hat, double loss_s_min,
                 double eps);
// sqrt(gap_b / gap_s); NaN flagged through KlBound when both gaps vanish
double optimal_eps(double gap_b, double gap_s);

// v-based variant: (1/2eps) gap_v + sup_t (gg(t) - eps)^2 / (2 eps) gap_s
KlBound kl_bound_v(double gap_v, double gap_s, double eps, const Schedule& sched);

}  // namespace si
