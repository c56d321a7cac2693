#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "maller/tangent.hpp"

using namespace maller;

namespace {

// Points exactly on a d-plane through the origin spanned by the first d
// columns of a random orthogonal matrix.
struct PlaneInstance {
  Dataset ds;
  Eigen::MatrixXd span;  // p x d
};

PlaneInstance plane_sample(int d, int p, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = gauss(rng);
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();

  PlaneInstance inst;
  inst.span = q.leftCols(d);
  inst.ds.predictors.resize(n, p);
  inst.ds.responses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd t(d);
    for (int j = 0; j < d; ++j) t(j) = gauss(rng);
    inst.ds.predictors.row(i) = (inst.span * t).transpose();
  }
  return inst;
}

// largest principal angle between span(a) and span(b), both orthonormal;
// computed through the projection residual so tiny angles are not lost to
// acos roundoff
double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd resid = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
  const double smax = svd.singularValues().maxCoeff();
  return std::asin(std::min(1.0, smax));
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

TEST_SUITE_BEGIN("tangent");

TEST_CASE("flat data recovers the plane exactly") {
  const PlaneInstance inst = plane_sample(2, 5, 400, 3);
  const Eigen::VectorXd x = inst.ds.predictors.row(7).transpose();
  const TangentFrame frame = local_pca(inst.ds, x, 2, 4.0);
  CHECK((frame.basis.transpose() * frame.basis -
         Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK(principal_angle(frame.basis, inst.span) < 1e-9);
  CHECK(frame.n_local > 2);
}

TEST_CASE("circle tangent at (1,0) is vertical") {
  const Dataset ds = circle_sample(2000, 5);
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const TangentFrame frame = local_pca(ds, x, 1, 0.01);
  Eigen::MatrixXd truth(2, 1);
  truth << 0.0, 1.0;
  CHECK(principal_angle(frame.basis, truth) < 0.1);

  // curvature-order eigenvalue gap of the local covariance
  const NeighborSet nbrs = true_neighbors(ds, x, 0.01);
  Eigen::MatrixXd pts(nbrs.indices.size(), 2);
  for (std::size_t i = 0; i < nbrs.indices.size(); ++i)
    pts.row(Eigen::Index(i)) = ds.predictors.row(nbrs.indices[i]);
  const Eigen::RowVector2d mu = pts.colwise().mean();
  const Eigen::Matrix2d sigma =
      (pts.rowwise() - mu).transpose() * (pts.rowwise() - mu);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sigma);
  CHECK(es.eigenvalues()(1) / es.eigenvalues()(0) >= 10.0);
}

TEST_CASE("sign fixing makes the basis deterministic") {
  const PlaneInstance inst = plane_sample(2, 4, 300, 9);
  const Eigen::VectorXd x = inst.ds.predictors.row(0).transpose();
  const TangentFrame a = local_pca(inst.ds, x, 2, 2.0);
  const TangentFrame b = local_pca(inst.ds, x, 2, 2.0);
  CHECK((a.basis - b.basis).cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j < 2; ++j) {
    Eigen::Index arg = 0;
    a.basis.col(j).cwiseAbs().maxCoeff(&arg);
    CHECK(a.basis(arg, j) > 0.0);
  }
}

TEST_CASE("gram trick handles p much larger than the neighborhood") {
  const PlaneInstance inst = plane_sample(2, 80, 30, 13);
  const Eigen::VectorXd x = inst.ds.predictors.row(4).transpose();
  const TangentFrame frame = local_pca(inst.ds, x, 2, 100.0);
  CHECK(principal_angle(frame.basis, inst.span) < 1e-8);
  CHECK((frame.basis.transpose() * frame.basis -
         Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("tangent coordinates") {
  const PlaneInstance inst = plane_sample(3, 6, 200, 17);
  const Eigen::VectorXd x = inst.ds.predictors.row(1).transpose();
  const TangentFrame frame = local_pca(inst.ds, x, 3, 9.0);

  Eigen::MatrixXd probe(3, 6);
  probe.row(0) = x.transpose();
  probe.row(1) = (x + frame.basis.col(0)).transpose();
  probe.row(2) = inst.ds.predictors.row(42);
  const Eigen::MatrixXd coords = tangent_coords(frame, probe);
  CHECK(coords.row(0).norm() < 1e-12);
  CHECK((coords.row(1) - Eigen::RowVector3d(1, 0, 0)).norm() < 1e-12);
  // projection contracts
  CHECK(coords.row(2).norm() <=
        (probe.row(2) - x.transpose()).norm() + 1e-12);

  Eigen::MatrixXd wrong(1, 5);
  CHECK_THROWS_AS(tangent_coords(frame, wrong), Error);
}

TEST_CASE("insufficient neighbors carries the count") {
  const PlaneInstance inst = plane_sample(2, 5, 50, 23);
  Eigen::VectorXd x = inst.ds.predictors.row(0).transpose();
  try {
    local_pca(inst.ds, x, 2, 1e-12);
    FAIL("expected InsufficientNeighbors");
  } catch (const InsufficientNeighbors& e) {
    CHECK(e.required == 3);
    CHECK(e.found < 3);
  }
}

TEST_CASE("circle tangent error decreases with sample size") {
  double last = 1e9;
  for (int n : {500, 2000, 8000}) {
    const Dataset ds = circle_sample(n, 29);
    std::vector<double> angles;
    for (int q = 0; q < 25; ++q) {
      const double t = 2.0 * M_PI * q / 25.0;
      Eigen::VectorXd x(2);
      x << std::cos(t), std::sin(t);
      Eigen::MatrixXd truth(2, 1);
      truth << -std::sin(t), std::cos(t);
      // shrink h_pca with n at the theory's rate for d = 1
      const double h_pca = 2.0 * std::pow(double(n), -1.0);
      const TangentFrame frame = local_pca(ds, x, 1, h_pca);
      angles.push_back(principal_angle(frame.basis, truth));
    }
    std::nth_element(angles.begin(), angles.begin() + angles.size() / 2,
                     angles.end());
    const double med = angles[angles.size() / 2];
    CAPTURE(n);
    CHECK(med < last);
    last = med;
  }
}

TEST_SUITE_END();
