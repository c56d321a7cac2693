#include "maller/cluster.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace maller {

namespace {

// Union-find over the graph of affinities above the floor. Candidate sets
// whose affinity graph splits into several components here are exactly the
// clean multi-sheet configurations the neighbor filter exists for.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(std::size_t(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[std::size_t(a)] != a) {
      parent[std::size_t(a)] = parent[std::size_t(parent[std::size_t(a)])];
      a = parent[std::size_t(a)];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::size_t(b)] = a;
  }
};

// Local scales: distance to the k-th nearest other point inside the set.
Eigen::VectorXd local_scales(const Eigen::MatrixXd& pair_d2, int k) {
  const int n = int(pair_d2.rows());
  k = std::min(k, n - 1);
  Eigen::VectorXd sigma(n);
  std::vector<double> row(std::size_t(n - 1));
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) row[std::size_t(m++)] = pair_d2(i, j);
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    sigma(i) = std::sqrt(row[std::size_t(k - 1)]);
  }
  return sigma;
}

Eigen::MatrixXd affinity_matrix(const Eigen::MatrixXd& pair_d2,
                                const Eigen::VectorXd& sigma) {
  const int n = int(pair_d2.rows());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double ss = sigma(i) * sigma(j);
      double v;
      if (pair_d2(i, j) == 0.0)
        v = 1.0;  // duplicates are perfectly affine regardless of scale
      else if (ss <= 0.0)
        v = 0.0;
      else
        v = std::exp(-pair_d2(i, j) / ss);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

// Rayleigh-quotient estimate of the second eigenvalue of D^-1/2 A D^-1/2 by
// power iteration with the known top eigenvector deflated.
double second_eigenvalue_estimate(const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& deg,
                                  std::uint64_t seed) {
  const int n = int(a.rows());
  Eigen::VectorXd dinv_sqrt =
      deg.array().max(1e-300).inverse().sqrt().matrix();
  Eigen::VectorXd v1 = deg.array().max(0.0).sqrt().matrix();
  v1.normalize();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = gauss(rng);
  w -= v1 * v1.dot(w);
  if (w.norm() < 1e-30) return 0.0;
  w.normalize();

  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd bw =
        dinv_sqrt.asDiagonal() * (a * (dinv_sqrt.asDiagonal() * w));
    bw -= v1 * v1.dot(bw);
    const double norm = bw.norm();
    if (norm < 1e-30) return 0.0;
    bw /= norm;
    lambda = bw.dot(dinv_sqrt.asDiagonal() * (a * (dinv_sqrt.asDiagonal() * bw)));
    w = bw;
  }
  return lambda;
}

double alignment_cost(const Eigen::MatrixXd& z) {
  double j = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mi2 = z.row(i).array().square().maxCoeff();
    if (mi2 > 0.0) j += z.row(i).squaredNorm() / mi2;
  }
  return j;
}

void apply_givens(Eigen::MatrixXd& z, int ci, int cj, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::VectorXd a = z.col(ci), b = z.col(cj);
  z.col(ci) = c * a - s * b;
  z.col(cj) = s * a + c * b;
}

Eigen::MatrixXd rotated(const Eigen::MatrixXd& x,
                        const std::vector<std::pair<int, int>>& pairs,
                        const Eigen::VectorXd& theta) {
  Eigen::MatrixXd z = x;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    apply_givens(z, pairs[k].first, pairs[k].second, theta(Eigen::Index(k)));
  return z;
}

}  // namespace

namespace detail {

double rotate_eigenvectors(Eigen::MatrixXd& vectors, int max_iter) {
  const int c = int(vectors.cols());
  if (c < 2) return alignment_cost(vectors);

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) pairs.emplace_back(i, j);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(Eigen::Index(pairs.size()));

  // Coordinate descent on the Givens angles of the alignment cost.
  double step = 0.1;
  double best = alignment_cost(vectors);
  for (int iter = 0; iter < max_iter && step > 1e-4; ++iter) {
    bool improved = false;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      for (const double dir : {+1.0, -1.0}) {
        Eigen::VectorXd cand = theta;
        cand(k) += dir * step;
        const double cost = alignment_cost(rotated(vectors, pairs, cand));
        if (cost < best - 1e-12) {
          best = cost;
          theta = cand;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  vectors = rotated(vectors, pairs, theta);
  return best;
}

}  // namespace detail

ClusterResult self_tuning_cluster(const Eigen::MatrixXd& pair_d2,
                                  const FilterParams& params) {
  const int n = int(pair_d2.rows());
  ClusterResult result;
  result.labels.assign(std::size_t(n), 0);
  if (n < 3) return result;

  const Eigen::VectorXd sigma = local_scales(pair_d2, params.sigma_k);
  const Eigen::MatrixXd a = affinity_matrix(pair_d2, sigma);
  const Eigen::VectorXd deg = a.rowwise().sum();

  // Gate 1: components of the floored affinity graph.
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a(i, j) > params.affinity_floor) uf.unite(i, j);
  int components = 0;
  for (int i = 0; i < n; ++i)
    if (uf.find(i) == i) ++components;

  // Gate 2: near-unit second eigenvalue signals a weakly coupled cut.
  if (components == 1) {
    if (n > params.lambda2_max_n) return result;
    const double lambda2 = second_eigenvalue_estimate(a, deg, params.seed);
    if (1.0 - lambda2 >= params.lambda2_gap) return result;
  }

  // Rotation-based selection of the cluster count.
  Eigen::VectorXd dinv_sqrt = deg.array().max(1e-300).inverse().sqrt().matrix();
  Eigen::MatrixXd lsym = dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lsym);
  if (es.info() != Eigen::Success)
    return result;  // keep the unsplit set rather than fail a query

  const int cmax = std::min(params.max_clusters, n - 1);
  double best_quality = -1.0;
  int best_c = 1;
  Eigen::MatrixXd best_z;
  for (int c = 2; c <= cmax; ++c) {
    // top-c eigenvectors by descending eigenvalue
    Eigen::MatrixXd vecs(n, c);
    for (int k = 0; k < c; ++k) vecs.col(k) = es.eigenvectors().col(n - 1 - k);
    const double cost = detail::rotate_eigenvectors(vecs);
    const double quality = 1.0 - (cost / double(n) - 1.0) / double(c);
    // prefer the largest count whose quality ties the best within 0.001
    if (quality > best_quality + 1e-3 ||
        (quality > best_quality - 1e-3 && c > best_c)) {
      if (quality > best_quality) best_quality = quality;
      best_c = c;
      best_z = vecs;
    }
  }

  if (best_c < 2 || best_quality < params.quality_min) return result;

  result.k = best_c;
  result.quality = best_quality;
  for (int i = 0; i < n; ++i) {
    int arg = 0;
    best_z.row(i).array().square().maxCoeff(&arg);
    result.labels[std::size_t(i)] = arg;
  }
  return result;
}

}  // namespace maller
