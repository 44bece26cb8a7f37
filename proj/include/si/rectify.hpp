#pragma once

// Flow rectification: materialize endpoint pairs (z, X_1(z)) of a frozen
// probability flow, re-interpolate x_rec = alpha z + beta X_1(z), fit the
// rectified velocity, and measure how far its trajectories are from the
// straight-line solution alpha(t) z + beta(t) X_1(z).

#include <cstdint>

#include "si/drift.hpp"
#include "si/integrators.hpp"
#include "si/interpolant.hpp"
#include "si/regression.hpp"
#include "si/types.hpp"

namespace si {

struct PairTable {
  Mat z;   // n x d latents
  Mat x1;  // n x d flow endpoints
};

// solve the flow once per latent; z ~ N(0, Id)
PairTable build_endpoint_map(const DriftField& b, std::size_t n, std::uint64_t seed,
                             const OdeOptions& opts = {});

// draws carry x0 = z, x1 = X1(z); gamma is zero (one-sided schedule)
DrawBatch build_rectified_draws(const PairTable& table, const Schedule& sched, std::size_t n,
                                const TimeSpec& time, std::uint64_t seed);

FeatureModel fit_rectified(const DrawBatch& draws, std::shared_ptr<const FeatureMap> fmap,
                           const FitOptions& opts = {});

// max over stored times and test pairs of |X_t(z) - (alpha z + beta X1)|
double verify_straightness(const DriftField& b_rec, const PairTable& test_pairs,
                           const Schedule& sched, int steps);

}  // namespace si
