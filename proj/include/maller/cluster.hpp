#pragma once

#include <Eigen/Core>

#include <vector>

#include "maller/neighbors.hpp"

namespace maller {

struct ClusterResult {
  std::vector<int> labels;  // one label per input point; all zero when k == 1
  int k = 1;                // number of clusters selected
  double quality = 1.0;     // rotation alignment quality of the accepted split
};

/// Self-tuning spectral clustering on a precomputed squared-distance matrix.
/// Local scales come from the sigma_k-th nearest neighbor inside the set; the
/// number of clusters in {1, ..., max_clusters} is chosen by the
/// eigenvector-rotation alignment criterion, with connectivity gates deciding
/// whether a split is attempted at all (see FilterParams).
ClusterResult self_tuning_cluster(const Eigen::MatrixXd& pair_d2,
                                  const FilterParams& params);

namespace detail {

/// Alignment cost minimization over Givens rotations of the top-C eigenvector
/// block. Returns the final cost J = sum_i sum_j Z_ij^2 / max_j Z_ij^2 and
/// leaves the rotated block in place.
double rotate_eigenvectors(Eigen::MatrixXd& vectors, int max_iter = 200);

}  // namespace detail

}  // namespace maller
