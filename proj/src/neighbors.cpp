#include "maller/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "maller/cluster.hpp"
#include "maller/simd.hpp"

namespace maller {

namespace {

constexpr int kLeafSize = 16;
constexpr int kMaxTreeDim = 16;  // beyond this a kd-tree cannot prune

}  // namespace

struct NeighborIndex::Impl {
  struct Node {
    double split = 0.0;
    int dim = -1;       // -1 marks a leaf
    int begin = 0, end = 0;
    int left = -1, right = -1;
  };

  Eigen::Index n = 0, p = 0;
  bool brute = false;
  Eigen::MatrixXd data;            // original points, row-major copy below
  std::vector<double> reordered;   // leaf-contiguous row-major storage
  std::vector<int> order;          // reordered position -> original index
  std::vector<Node> nodes;

  explicit Impl(const Eigen::MatrixXd& points)
      : n(points.rows()), p(points.cols()), data(points) {
    brute = p > kMaxTreeDim || n <= 2 * kLeafSize;
    order.resize(std::size_t(n));
    std::iota(order.begin(), order.end(), 0);
    if (!brute) build(0, int(n));
    reordered.resize(std::size_t(n * p));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        reordered[std::size_t(i * p + j)] = data(order[std::size_t(i)], j);
  }

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const int id = int(nodes.size());
    nodes.push_back(node);
    if (end - begin <= kLeafSize) return id;

    // split on the dimension with the widest extent
    int dim = 0;
    double best_extent = -1.0;
    for (int j = 0; j < p; ++j) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int i = begin; i < end; ++i) {
        const double v = data(order[std::size_t(i)], j);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_extent) {
        best_extent = hi - lo;
        dim = j;
      }
    }
    if (best_extent <= 0.0) return id;  // all duplicates: keep as leaf

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid,
                     order.begin() + end, [&](int a, int b) {
                       return data(a, dim) < data(b, dim);
                     });
    nodes[std::size_t(id)].dim = dim;
    nodes[std::size_t(id)].split = data(order[std::size_t(mid)], dim);
    const int left = build(begin, mid);
    nodes[std::size_t(id)].left = left;
    const int right = build(mid, end);
    nodes[std::size_t(id)].right = right;
    return id;
  }

  void scan_range(int begin, int end, const double* q, double delta,
                  std::vector<int>& idx, std::vector<double>& d2,
                  std::vector<double>& scratch) const {
    const std::size_t m = std::size_t(end - begin);
    scratch.resize(m);
    simd::squared_distances(reordered.data() + std::size_t(begin) * p, m,
                            std::size_t(p), q, scratch.data());
    for (std::size_t i = 0; i < m; ++i) {
      if (scratch[i] < delta) {
        idx.push_back(order[std::size_t(begin) + i]);
        d2.push_back(scratch[i]);
      }
    }
  }

  void radius_rec(int id, const double* q, double delta, std::vector<int>& idx,
                  std::vector<double>& d2, std::vector<double>& scratch) const {
    const Node& node = nodes[std::size_t(id)];
    if (node.dim < 0) {
      scan_range(node.begin, node.end, q, delta, idx, d2, scratch);
      return;
    }
    const double diff = q[node.dim] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    radius_rec(near, q, delta, idx, d2, scratch);
    if (diff * diff < delta) radius_rec(far, q, delta, idx, d2, scratch);
  }

  // bounded max-heap knn
  void knn_rec(int id, const double* q,
               std::priority_queue<std::pair<double, int>>& heap, int k,
               std::vector<double>& scratch) const {
    const Node& node = nodes[std::size_t(id)];
    if (node.dim < 0) {
      const std::size_t m = std::size_t(node.end - node.begin);
      scratch.resize(m);
      simd::squared_distances(reordered.data() + std::size_t(node.begin) * p, m,
                              std::size_t(p), q, scratch.data());
      for (std::size_t i = 0; i < m; ++i) {
        const double dd = scratch[i];
        if (int(heap.size()) < k) {
          heap.emplace(dd, order[std::size_t(node.begin) + i]);
        } else if (dd < heap.top().first) {
          heap.pop();
          heap.emplace(dd, order[std::size_t(node.begin) + i]);
        }
      }
      return;
    }
    const double diff = q[node.dim] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    knn_rec(near, q, heap, k, scratch);
    if (int(heap.size()) < k || diff * diff < heap.top().first)
      knn_rec(far, q, heap, k, scratch);
  }
};

NeighborIndex::NeighborIndex(const Eigen::MatrixXd& points)
    : impl_(std::make_unique<Impl>(points)) {}
NeighborIndex::~NeighborIndex() = default;
NeighborIndex::NeighborIndex(NeighborIndex&&) noexcept = default;
NeighborIndex& NeighborIndex::operator=(NeighborIndex&&) noexcept = default;

Eigen::Index NeighborIndex::size() const { return impl_->n; }

void NeighborIndex::radius(const Eigen::VectorXd& x, double delta,
                           std::vector<int>& idx, std::vector<double>& d2) const {
  if (x.size() != impl_->p) throw Error("radius query: dimension mismatch");
  if (delta <= 0.0) throw Error("radius query: delta must be positive");
  idx.clear();
  d2.clear();
  std::vector<double> scratch;
  if (impl_->brute)
    impl_->scan_range(0, int(impl_->n), x.data(), delta, idx, d2, scratch);
  else
    impl_->radius_rec(0, x.data(), delta, idx, d2, scratch);
}

std::vector<int> NeighborIndex::radius(const Eigen::VectorXd& x,
                                       double delta) const {
  std::vector<int> idx;
  std::vector<double> d2;
  radius(x, delta, idx, d2);
  return idx;
}

void NeighborIndex::knn(const Eigen::VectorXd& x, int k, std::vector<int>& idx,
                        std::vector<double>& d2) const {
  if (x.size() != impl_->p) throw Error("knn query: dimension mismatch");
  k = std::min<int>(k, int(impl_->n));
  std::priority_queue<std::pair<double, int>> heap;
  std::vector<double> scratch;
  if (impl_->brute) {
    scratch.resize(std::size_t(impl_->n));
    simd::squared_distances(impl_->reordered.data(), std::size_t(impl_->n),
                            std::size_t(impl_->p), x.data(), scratch.data());
    for (Eigen::Index i = 0; i < impl_->n; ++i) {
      if (int(heap.size()) < k)
        heap.emplace(scratch[std::size_t(i)], impl_->order[std::size_t(i)]);
      else if (scratch[std::size_t(i)] < heap.top().first) {
        heap.pop();
        heap.emplace(scratch[std::size_t(i)], impl_->order[std::size_t(i)]);
      }
    }
  } else {
    impl_->knn_rec(0, x.data(), heap, k, scratch);
  }
  idx.resize(heap.size());
  d2.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    idx[i] = heap.top().second;
    d2[i] = heap.top().first;
    heap.pop();
  }
}

NeighborSet euclidean_neighbors(const Dataset& ds, const Eigen::VectorXd& x,
                                double delta, const NeighborIndex* index) {
  NeighborSet out;
  out.query = x;
  out.delta = delta;
  if (index) {
    out.indices = index->radius(x, delta);
  } else {
    NeighborIndex local(ds.predictors);
    out.indices = local.radius(x, delta);
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

namespace {

NeighborSet filter_candidates(const Dataset& ds, const Eigen::VectorXd& x,
                              double delta, const FilterParams& params,
                              const std::vector<int>& idx) {
  NeighborSet out;
  out.query = x;
  out.delta = delta;
  const int m = int(idx.size());
  if (m < params.min_candidates) {
    out.indices = idx;
    std::sort(out.indices.begin(), out.indices.end());
    return out;
  }

  // Pairwise squared distances over {x} + candidates; the query is row 0.
  Eigen::MatrixXd pts(m + 1, ds.p());
  pts.row(0) = x.transpose();
  for (int i = 0; i < m; ++i) pts.row(i + 1) = ds.predictors.row(idx[std::size_t(i)]);
  Eigen::MatrixXd pair_d2(m + 1, m + 1);
  for (int i = 0; i <= m; ++i) {
    pair_d2(i, i) = 0.0;
    for (int j = i + 1; j <= m; ++j) {
      const double dd = (pts.row(i) - pts.row(j)).squaredNorm();
      pair_d2(i, j) = dd;
      pair_d2(j, i) = dd;
    }
  }

  ClusterResult cl = self_tuning_cluster(pair_d2, params);
  if (cl.k <= 1) {
    out.indices = idx;
    std::sort(out.indices.begin(), out.indices.end());
    return out;
  }
  const int own = cl.labels[0];
  for (int i = 0; i < m; ++i)
    if (cl.labels[std::size_t(i + 1)] == own) out.indices.push_back(idx[std::size_t(i)]);
  std::sort(out.indices.begin(), out.indices.end());
  out.filtered = true;
  return out;
}

}  // namespace

NeighborSet true_neighbors(const Dataset& ds, const Eigen::VectorXd& x,
                           double delta, const FilterParams& params,
                           const NeighborIndex* index) {
  std::vector<int> idx;
  std::vector<double> d2;
  if (index) {
    index->radius(x, delta, idx, d2);
  } else {
    NeighborIndex local(ds.predictors);
    local.radius(x, delta, idx, d2);
  }
  return filter_candidates(ds, x, delta, params, idx);
}

CandidateCache::CandidateCache(const Dataset& ds, const NeighborIndex& index,
                               const Eigen::VectorXd& x, double delta_max)
    : x_(x), delta_max_(delta_max) {
  index.radius(x, delta_max, idx_, d2_);
  // sort candidates by ascending distance so any smaller radius is a prefix
  std::vector<int> perm(idx_.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(),
            [&](int a, int b) { return d2_[std::size_t(a)] < d2_[std::size_t(b)]; });
  std::vector<int> idx2(idx_.size());
  std::vector<double> d22(idx_.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    idx2[i] = idx_[std::size_t(perm[i])];
    d22[i] = d2_[std::size_t(perm[i])];
  }
  idx_ = std::move(idx2);
  d2_ = std::move(d22);

  points_.resize(Eigen::Index(idx_.size()) + 1, x.size());
  points_.row(0) = x.transpose();
  // capture coordinates once; ds must outlive nothing (copied here)
  for (std::size_t i = 0; i < idx_.size(); ++i)
    points_.row(Eigen::Index(i) + 1) = ds.predictors.row(idx_[i]);
}

const Eigen::MatrixXd& CandidateCache::pair_d2() {
  if (!have_pairs_) {
    const Eigen::Index n = points_.rows();
    pair_d2_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pair_d2_(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double dd = (points_.row(i) - points_.row(j)).squaredNorm();
        pair_d2_(i, j) = dd;
        pair_d2_(j, i) = dd;
      }
    }
    have_pairs_ = true;
  }
  return pair_d2_;
}

NeighborSet CandidateCache::neighbors(double delta, const FilterParams& params) {
  if (delta > delta_max_ * (1.0 + 1e-12))
    throw Error("CandidateCache: radius exceeds the cached query radius");
  NeighborSet out;
  out.query = x_;
  out.delta = delta;
  const auto it = std::lower_bound(d2_.begin(), d2_.end(), delta);
  const int m = int(it - d2_.begin());
  if (m < params.min_candidates) {
    out.indices.assign(idx_.begin(), idx_.begin() + m);
    std::sort(out.indices.begin(), out.indices.end());
    return out;
  }
  const Eigen::MatrixXd& full = pair_d2();
  const Eigen::MatrixXd sub = full.topLeftCorner(m + 1, m + 1);
  ClusterResult cl = self_tuning_cluster(sub, params);
  if (cl.k <= 1) {
    out.indices.assign(idx_.begin(), idx_.begin() + m);
    std::sort(out.indices.begin(), out.indices.end());
    return out;
  }
  const int own = cl.labels[0];
  for (int i = 0; i < m; ++i)
    if (cl.labels[std::size_t(i + 1)] == own)
      out.indices.push_back(idx_[std::size_t(i)]);
  std::sort(out.indices.begin(), out.indices.end());
  out.filtered = true;
  return out;
}

}  // namespace maller
