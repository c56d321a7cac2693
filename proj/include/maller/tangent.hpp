#pragma once

#include <Eigen/Core>

#include "maller/dataset.hpp"
#include "maller/neighbors.hpp"

namespace maller {

/// Orthonormal basis of the estimated embedded tangent plane at a query point.
struct TangentFrame {
  Eigen::VectorXd x;      // query point in R^p
  Eigen::MatrixXd basis;  // p x d, orthonormal columns, sign-fixed
  double h_pca = 0.0;     // bandwidth actually used (after any escalation)
  int n_local = 0;        // neighbors entering the covariance
};

/// Local PCA tangent estimate: eigenvectors of the neighborhood covariance
///   Sigma_x = (1/n) sum_{l in N} (X_l - mu)(X_l - mu)^T
/// with n the full sample size (the divisor scales eigenvalues, not
/// eigenvectors). Columns are ordered by descending eigenvalue and sign-fixed
/// so the entry of largest magnitude is positive. Throws
/// InsufficientNeighbors when fewer than d+1 true neighbors are available.
TangentFrame local_pca(const Dataset& ds, const Eigen::VectorXd& x, int d,
                       double h_pca, const FilterParams& filter = {},
                       const NeighborIndex* index = nullptr);

/// Variant taking a precomputed neighbor set (for the per-query cache path).
TangentFrame local_pca_from_neighbors(const Dataset& ds,
                                      const Eigen::VectorXd& x, int d,
                                      double h_pca,
                                      const std::vector<int>& neighbor_idx);

/// Row l = basis^T (points_l - x): local coordinates on the tangent plane.
Eigen::MatrixXd tangent_coords(const TangentFrame& frame,
                               const Eigen::MatrixXd& points);

}  // namespace maller
