#pragma once

// Gaussian-mixture endpoints and the closed-form bridge quantities for
// spatially linear interpolants: density, velocity, score, the three
// conditional-expectation fields, exact divergences, moment propagation,
// and the point-mass diffusive drift. Everything is evaluated in
// log-space with log-sum-exp over the (i,j) component grid.

#include <cstdint>
#include <vector>

#include "si/rng.hpp"
#include "si/schedule.hpp"
#include "si/types.hpp"

namespace si {

struct GaussianMixture {
  Vec weights;                  // N, positive, sums to 1
  Mat means;                    // N x d
  std::vector<SquareMat> covs;  // N of d x d SPD
  std::vector<SquareMat> chol_l;
  Vec log_weights;
  Vec log_norms;  // Gaussian normalizing constants (log)

  int dim() const { return static_cast<int>(means.cols()); }
  int modes() const { return static_cast<int>(means.rows()); }

  static GaussianMixture create(Vec weights, Mat means, std::vector<SquareMat> covs);
  static GaussianMixture standard(int d);
  static GaussianMixture single(const Vec& mean, const SquareMat& cov);
  // means iid N(0, sigma^2 Id), covs (1/d) W^T W + Id
  static GaussianMixture random(int d, int modes, double mean_sigma, std::uint64_t seed);

  double log_density(const double* x) const;
  void score(const double* x, double* out) const;
  Vec mean() const;
  SquareMat covariance() const;

  // deterministic: draw `idx` depends only on (g.seed, g.stream, idx)
  void sample(const rng::Philox& g, std::uint64_t idx, double* out) const;
};

// What to compute at a point; null pointers are skipped.
struct BridgeRequest {
  double* logp = nullptr;
  double* b = nullptr;      // velocity, d
  double* v = nullptr;      // dtI conditional mean, d
  double* s = nullptr;      // score, d
  double* eta0 = nullptr;   // E[x0 | x_t], d
  double* eta1 = nullptr;   // E[x1 | x_t], d
  double* etaz = nullptr;   // E[z | x_t], d
  double* div_b = nullptr;  // exact divergence of b
  double* div_s = nullptr;
};

// All (i,j) bridge components frozen at one time t.
class GmmBridge {
 public:
  GmmBridge(const GaussianMixture& mix0, const GaussianMixture& mix1, const Schedule& sched,
            double t);

  void evaluate(const double* x, const BridgeRequest& req) const;
  double log_density(const double* x) const;
  int dim() const { return d_; }
  double time() const { return t_; }

 private:
  struct Component {
    Vec m;          // m_ij(t)
    Vec dm;         // dt m_ij(t)
    SquareMat cov;  // C_ij(t)
    SquareMat chol;
    SquareMat cov_inv;
    SquareMat dcov;  // dt C_ij(t)
    double log_w;    // log p_i p_j + gaussian log-norm
    double tr_dcov_cinv;
    double tr_cinv;
    int i, j;
  };

  int d_;
  double t_;
  double alpha_, beta_, gamma_, da_, db_, aa_, bb_, gg_;
  const GaussianMixture* mix0_;
  const GaussianMixture* mix1_;
  std::vector<Component> comps_;
};

// Exact mean/covariance propagation of the linear SDE built from a
// single-Gaussian pair: dX = dm + (Cdot/2 - eps) C^{-1} (X - m) dt + sqrt(2 eps) dW.
// `drift_offset`, when given, adds a constant vector to the drift.
struct MomentTrajectory {
  std::vector<double> t;
  std::vector<Vec> mean;
  std::vector<SquareMat> cov;
};

MomentTrajectory linear_sde_moments(const Vec& mean_init, const SquareMat& cov_init,
                                    const GaussianMixture& g0, const GaussianMixture& g1,
                                    const Schedule& sched, double eps,
                                    const std::vector<double>& t_grid,
                                    const Vec* drift_offset = nullptr);

// Drift of the diffusive point-mass generator dX = u dt + sqrt(2a) dW from
// X_0 = x0 toward the mixture target. Uses gamma^2(t) = 2 a t (1-t). The
// plateau variant freezes the deterministic part on [0, delta].
class PointMassDrift {
 public:
  PointMassDrift(Vec x0, const GaussianMixture& target, double a, bool plateau = false,
                 double delta = 0.05);

  // per-time preparation; reuse across a batch of points at the same t
  struct Frozen {
    double t = 0.0;
    bool at_origin = false;
    double beta = 0.0, dbeta = 0.0, gg = 0.0, dalpha = 0.0;
    std::vector<Vec> mu;
    std::vector<SquareMat> cov_inv;
    std::vector<double> log_w;
  };
  Frozen freeze(double t) const;
  void fields(const Frozen& fr, const double* x, double* u, double* b, double* s) const;

  void drift_u(double t, const double* x, double* out) const;
  // velocity/score of the same point-mass bridge (u = b + a s on (0,1))
  void velocity_b(double t, const double* x, double* out) const;
  void score_s(double t, const double* x, double* out) const;
  int dim() const { return static_cast<int>(x0_.size()); }
  double diffusion_a() const { return a_; }
  const Vec& origin() const { return x0_; }
  const GaussianMixture& target() const { return *target_; }

 private:
  struct Coeffs {
    double beta, dbeta, gamma2;
  };
  Coeffs coeffs(double t) const;

  Vec x0_;
  const GaussianMixture* target_;
  double a_;
  bool plateau_;
  double delta_;
};

}  // namespace si
