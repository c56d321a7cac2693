#include <doctest.h>

#include <algorithm>
#include <random>

#include "maller/cluster.hpp"
#include "maller/neighbors.hpp"

using namespace maller;

namespace {

Dataset random_cloud(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset ds;
  ds.predictors.resize(n, p);
  ds.responses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) ds.predictors(i, j) = gauss(rng);
  return ds;
}

std::vector<int> brute_radius(const Dataset& ds, const Eigen::VectorXd& x,
                              double delta) {
  std::vector<int> out;
  for (int i = 0; i < ds.n(); ++i)
    if ((ds.predictors.row(i).transpose() - x).squaredNorm() < delta)
      out.push_back(i);
  return out;
}

// Two parallel segments along e1 at ambient gap `gap` in the e2 direction;
// the first half of the indices belong to segment A (through the origin).
Dataset parallel_segments(int per_segment, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.6, 0.6);
  Dataset ds;
  ds.predictors = Eigen::MatrixXd::Zero(2 * per_segment, 2);
  ds.responses = Eigen::VectorXd::Zero(2 * per_segment);
  for (int i = 0; i < per_segment; ++i) ds.predictors(i, 0) = unif(rng);
  for (int i = 0; i < per_segment; ++i) {
    ds.predictors(per_segment + i, 0) = unif(rng);
    ds.predictors(per_segment + i, 1) = gap;
  }
  return ds;
}

Dataset circle_sample(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
  Dataset ds;
  ds.predictors.resize(n, 2);
  ds.responses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double t = unif(rng);
    ds.predictors(i, 0) = std::cos(t);
    ds.predictors(i, 1) = std::sin(t);
  }
  return ds;
}

}  // namespace

TEST_SUITE_BEGIN("neighbors");

TEST_CASE("strict radius inequality") {
  Dataset ds;
  ds.predictors.resize(2, 1);
  ds.predictors << 0.0, 1.0;
  ds.responses = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd x(1);
  x << 0.0;
  const NeighborSet nb = euclidean_neighbors(ds, x, 1.0);
  CHECK(nb.indices == std::vector<int>{0});  // the point at distance 1 is out
  CHECK_FALSE(nb.filtered);
}

TEST_CASE("radius larger than the squared diameter returns everything") {
  const Dataset ds = random_cloud(100, 3, 1);
  Eigen::VectorXd x = ds.predictors.row(0).transpose();
  const double diam2 =
      4.0 * (ds.predictors.rowwise() - x.transpose()).rowwise().squaredNorm().maxCoeff();
  CHECK(euclidean_neighbors(ds, x, diam2 + 1.0).indices.size() == 100);
}

TEST_CASE("spatial index agrees with the brute-force oracle") {
  const Dataset ds = random_cloud(1000, 3, 42);
  const NeighborIndex index(ds.predictors);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> rad(0.01, 2.0);
  for (int q = 0; q < 100; ++q) {
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x(j) = gauss(rng);
    const double delta = rad(rng);
    std::vector<int> got = euclidean_neighbors(ds, x, delta, &index).indices;
    std::vector<int> want = brute_radius(ds, x, delta);
    CHECK(got == want);
  }
}

TEST_CASE("knn returns ascending distances and agrees with radius queries") {
  const Dataset ds = random_cloud(500, 4, 7);
  const NeighborIndex index(ds.predictors);
  std::vector<int> idx;
  std::vector<double> d2;
  index.knn(ds.predictors.row(17).transpose(), 8, idx, d2);
  REQUIRE(idx.size() == 8);
  CHECK(idx[0] == 17);  // the query is a data row
  CHECK(std::is_sorted(d2.begin(), d2.end()));
  // every returned point must be inside the ball through the last one
  const auto ball = index.radius(ds.predictors.row(17).transpose(),
                                 d2.back() + 1e-12);
  for (int i : idx) CHECK(std::count(ball.begin(), ball.end(), i) == 1);
}

TEST_CASE("two parallel segments: only the query's sheet survives") {
  // sqrt(delta) = 0.5 spans the 0.3 ambient gap, so the Euclidean ball grabs
  // both sheets; the filter must keep segment A only.
  const Dataset ds = parallel_segments(240, 0.3, 5);
  Eigen::VectorXd x(2);
  x << 0.0, 0.0;
  const NeighborSet plain = euclidean_neighbors(ds, x, 0.25);
  bool plain_has_b = false;
  for (int i : plain.indices) plain_has_b |= (i >= 240);
  REQUIRE(plain_has_b);  // the instance is only interesting if both appear

  const NeighborSet filtered = true_neighbors(ds, x, 0.25);
  CHECK(filtered.filtered);
  CHECK(!filtered.indices.empty());
  for (int i : filtered.indices) {
    CAPTURE(i);
    CHECK(i < 240);
  }
  // contraction and subset of the plain set
  CHECK(filtered.indices.size() <= plain.indices.size());
  for (int i : filtered.indices)
    CHECK(std::binary_search(plain.indices.begin(), plain.indices.end(), i));
}

TEST_CASE("single blob passes through unfiltered") {
  const Dataset ds = random_cloud(300, 2, 9);
  Eigen::VectorXd x = ds.predictors.row(3).transpose();
  const NeighborSet plain = euclidean_neighbors(ds, x, 1.0);
  const NeighborSet filtered = true_neighbors(ds, x, 1.0);
  CHECK(filtered.indices == plain.indices);
}

TEST_CASE("query's own index stays in its cluster") {
  const Dataset ds = parallel_segments(240, 0.3, 6);
  for (int probe : {0, 10, 250}) {
    const Eigen::VectorXd x = ds.predictors.row(probe).transpose();
    const NeighborSet nb = true_neighbors(ds, x, 0.25);
    CHECK(std::count(nb.indices.begin(), nb.indices.end(), probe) == 1);
  }
}

TEST_CASE("filter is a contraction on random configurations") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const Dataset ds = random_cloud(200, 3, seed);
    const Eigen::VectorXd x = ds.predictors.row(0).transpose();
    const NeighborSet plain = euclidean_neighbors(ds, x, 2.0);
    const NeighborSet filt = true_neighbors(ds, x, 2.0);
    CHECK(filt.indices.size() <= plain.indices.size());
  }
}

TEST_CASE("filter is a no-op on at least 99% of circle queries") {
  const Dataset ds = circle_sample(2000, 31);
  const NeighborIndex index(ds.predictors);
  int filtered_count = 0;
  const int queries = 200;
  for (int q = 0; q < queries; ++q) {
    const Eigen::VectorXd x = ds.predictors.row(q * 7 % 2000).transpose();
    const NeighborSet nb = true_neighbors(ds, x, 0.01, {}, &index);
    const NeighborSet plain = euclidean_neighbors(ds, x, 0.01, &index);
    if (nb.indices != plain.indices) ++filtered_count;
  }
  CHECK(double(filtered_count) <= 0.01 * queries);
}

TEST_CASE("clustering is deterministic under a fixed seed") {
  const Dataset ds = parallel_segments(200, 0.25, 8);
  Eigen::VectorXd x(2);
  x << 0.1, 0.0;
  FilterParams params;
  params.seed = 999;
  const NeighborSet a = true_neighbors(ds, x, 0.25, params);
  const NeighborSet b = true_neighbors(ds, x, 0.25, params);
  CHECK(a.indices == b.indices);
  CHECK(a.filtered == b.filtered);
}

TEST_CASE("candidate cache serves prefixes consistently") {
  const Dataset ds = parallel_segments(240, 0.3, 14);
  const NeighborIndex index(ds.predictors);
  Eigen::VectorXd x(2);
  x << 0.2, 0.0;
  CandidateCache cache(ds, index, x, 0.3);
  for (double delta : {0.02, 0.1, 0.25, 0.3}) {
    const NeighborSet from_cache = cache.neighbors(delta, {});
    const NeighborSet direct = true_neighbors(ds, x, delta, {}, &index);
    CAPTURE(delta);
    CHECK(from_cache.indices == direct.indices);
    CHECK(from_cache.filtered == direct.filtered);
  }
  CHECK_THROWS_AS(cache.neighbors(0.4, {}), Error);
}

TEST_CASE("self-tuning clustering separates clean groups") {
  // two 2-D gaussian blobs far apart
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 0.05);
  const int half = 40;
  Eigen::MatrixXd pts(2 * half, 2);
  for (int i = 0; i < half; ++i)
    pts.row(i) << gauss(rng), gauss(rng);
  for (int i = 0; i < half; ++i)
    pts.row(half + i) << 2.0 + gauss(rng), gauss(rng);
  Eigen::MatrixXd d2(2 * half, 2 * half);
  for (int i = 0; i < 2 * half; ++i)
    for (int j = 0; j < 2 * half; ++j)
      d2(i, j) = (pts.row(i) - pts.row(j)).squaredNorm();
  const ClusterResult res = self_tuning_cluster(d2, {});
  CHECK(res.k == 2);
  for (int i = 1; i < half; ++i) CHECK(res.labels[std::size_t(i)] == res.labels[0]);
  for (int i = half; i < 2 * half; ++i)
    CHECK(res.labels[std::size_t(i)] == res.labels[std::size_t(half)]);
  CHECK(res.labels[0] != res.labels[std::size_t(half)]);
}

TEST_SUITE_END();
