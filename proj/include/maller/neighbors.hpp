#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

#include "maller/dataset.hpp"

namespace maller {

/// Result of a radius query: indices of points with ||X_i - x|| < sqrt(delta)
/// (strict), optionally filtered down to the query's cluster.
struct NeighborSet {
  Eigen::VectorXd query;
  double delta = 0.0;  // squared radius
  std::vector<int> indices;
  bool filtered = false;
};

/// Exact spatial index over the rows of a point matrix. Uses a kd-tree for
/// moderate ambient dimension and falls back to a vectorized linear scan when
/// p is large (tree pruning is useless there).
class NeighborIndex {
public:
  explicit NeighborIndex(const Eigen::MatrixXd& points);
  ~NeighborIndex();
  NeighborIndex(NeighborIndex&&) noexcept;
  NeighborIndex& operator=(NeighborIndex&&) noexcept;

  /// Indices with squared distance strictly below delta, unordered.
  std::vector<int> radius(const Eigen::VectorXd& x, double delta) const;

  /// Same, also returning the squared distances (parallel arrays).
  void radius(const Eigen::VectorXd& x, double delta, std::vector<int>& idx,
              std::vector<double>& d2) const;

  /// k nearest neighbors sorted by ascending distance (squared distances
  /// returned). The query point itself is included if it is a data row.
  void knn(const Eigen::VectorXd& x, int k, std::vector<int>& idx,
           std::vector<double>& d2) const;

  Eigen::Index size() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parameters of the cluster-based neighbor filter. The affinity is the
/// locally scaled exp(-d^2/(sigma_i sigma_j)) with sigma_i the distance to the
/// sigma_k-th nearest candidate. A candidate set is split only when the
/// affinity graph has a near-disconnected cut (floor components, or second
/// random-walk eigenvalue above 1 - lambda2_gap) and the rotation criterion
/// finds an alignment of quality at least quality_min.
struct FilterParams {
  int min_candidates = 10;   // below this, pass through unfiltered
  int max_clusters = 5;
  int sigma_k = 7;
  double affinity_floor = 1e-7;
  double lambda2_gap = 5e-4;
  int lambda2_max_n = 400;   // skip the eigen gate for larger (dense) sets
  double quality_min = 0.90;
  std::uint64_t seed = 0x5eed;
};

NeighborSet euclidean_neighbors(const Dataset& ds, const Eigen::VectorXd& x,
                                double delta,
                                const NeighborIndex* index = nullptr);

/// Euclidean neighbors restricted to the query's cluster under self-tuning
/// spectral clustering of the candidate set plus the query itself. Falls back
/// to the unfiltered set (filtered = false) for small candidate sets or when
/// no credible split exists.
NeighborSet true_neighbors(const Dataset& ds, const Eigen::VectorXd& x,
                           double delta, const FilterParams& params = {},
                           const NeighborIndex* index = nullptr);

/// Reusable per-query candidate state: one radius query at the largest needed
/// radius plus a cached pairwise distance matrix; prefixes serve all smaller
/// radii. Used by the fit engine to amortize work across a bandwidth grid.
class CandidateCache {
public:
  CandidateCache(const Dataset& ds, const NeighborIndex& index,
                 const Eigen::VectorXd& x, double delta_max);

  /// Neighbor indices within sqrt(delta), cluster-filtered. Requires
  /// delta <= delta_max.
  NeighborSet neighbors(double delta, const FilterParams& params);

  const Eigen::VectorXd& query() const { return x_; }
  double delta_max() const { return delta_max_; }

private:
  const Eigen::MatrixXd& pair_d2();

  Eigen::VectorXd x_;
  double delta_max_;
  std::vector<int> idx_;        // sorted by ascending distance to x
  std::vector<double> d2_;
  Eigen::MatrixXd points_;      // compact candidate coordinates (query first)
  Eigen::MatrixXd pair_d2_;     // lazily built (query is row/col 0)
  bool have_pairs_ = false;
};

}  // namespace maller
