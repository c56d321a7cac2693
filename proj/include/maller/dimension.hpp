#pragma once

#include "maller/dataset.hpp"
#include "maller/neighbors.hpp"

namespace maller {

struct DimensionEstimate {
  int d_hat = 1;       // rounded estimate, clamped to [1, p]
  double raw = 0.0;    // pre-rounding average of the per-point estimates
  int k_min = 10;
  int k_max = 20;
  int excluded = 0;    // per-(point, k) terms dropped because of duplicates
};

/// Maximum-likelihood intrinsic dimension from nearest-neighbor distance
/// ratios, averaged over points and over k in [k_min, k_max]:
///   m_k(x) = [ (1/(k-1)) sum_{j<k} log(T_k(x)/T_j(x)) ]^-1.
/// Ties at .5 round up. Duplicate points (zero distances) are excluded with a
/// count; if everything is excluded the dataset is degenerate.
DimensionEstimate mle_dimension(const Dataset& ds, int k_min = 10,
                                int k_max = 20,
                                const NeighborIndex* index = nullptr);

}  // namespace maller
