#pragma once

// Time coefficients (alpha, beta, gamma) of a spatially linear interpolant
// x_t = alpha(t) x0 + beta(t) x1 + gamma(t) z, plus the derivative products
// alpha*dalpha, beta*dbeta, gamma*dgamma that stay finite where the raw
// derivatives do not (gamma = sqrt(a t(1-t)) has dgamma -> inf at the
// endpoints but gamma*dgamma -> +-a/2).
//
// Conventions:
//   TwoSided  : alpha multiplies x0, beta multiplies x1.
//   OneSided  : gamma == 0 and alpha multiplies the latent z (the base is
//               N(0,Id)); beta multiplies x1.
//   Mirror    : alpha multiplies x1 (the K coefficient), beta == 0.

#include <functional>
#include <string>
#include <vector>

namespace si {

enum class ScheduleKind { TwoSided, OneSided, Mirror };
enum class ScheduleName { Linear, Trig, EncDec, SbdmVp, MirrorFlat };
enum class GammaName { None, BrownianBridge, Quadratic, SigmoidSum, SinSquared };

struct GammaSpec {
  GammaName name = GammaName::None;
  double a = 1.0;   // BrownianBridge scale
  double f = 20.0;  // SigmoidSum scaling factor
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::TwoSided;
  std::string id;

  std::function<double(double)> alpha_fn, beta_fn, gamma_fn;
  std::function<double(double)> d_alpha_fn, d_beta_fn, d_gamma_fn;
  std::function<double(double)> gg_fn;  // gamma*dgamma, valid on (0,1)
  std::function<double(double)> aa_fn;  // alpha*dalpha, finite on [0,1]
  std::function<double(double)> bb_fn;  // beta*dbeta, finite on [0,1]
  double gg_limit_0 = 0.0;
  double gg_limit_1 = 0.0;
  bool d_gamma_singular = false;  // endpoints only
  bool d_alpha_singular = false;  // SBDM at t=1
  bool variance_preserving = false;

  double alpha(double t) const { return alpha_fn(t); }
  double beta(double t) const { return beta_fn(t); }
  double gamma(double t) const { return gamma_fn(t); }
  double d_alpha(double t) const { return d_alpha_fn(t); }
  double d_beta(double t) const { return d_beta_fn(t); }
  double d_gamma(double t) const { return d_gamma_fn(t); }
  double aa(double t) const { return aa_fn(t); }
  double bb(double t) const { return bb_fn(t); }

  // gamma*dgamma; near-singular endpoints are answered with the stored limits
  double gg(double t) const {
    constexpr double kEdge = 1e-6;
    if (d_gamma_singular) {
      if (t < kEdge) return gg_limit_0;
      if (t > 1.0 - kEdge) return gg_limit_1;
    }
    return gg_fn(t);
  }
};

Schedule make_schedule(ScheduleName name, GammaSpec gamma = {});

// CLI identifiers: "linear" | "trig" | "encdec" | "sbdm-vp" | "mirror" and
// "none" | "bb" | "bb:a=<x>" | "quad" | "sigmoid" | "sigmoid:f=<x>" | "sin2"
Schedule parse_schedule(const std::string& name, const std::string& gamma);
GammaSpec parse_gamma(const std::string& gamma);

struct ValidationIssue {
  double t;
  std::string what;
};

struct ValidationReport {
  bool ok = true;
  bool variance_preserving = false;
  std::vector<ValidationIssue> issues;
};

ValidationReport validate(const Schedule& s, int grid_points = 10000, double tol = 1e-10);

}  // namespace si
