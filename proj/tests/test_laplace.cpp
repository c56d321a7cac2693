#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "maller/laplace.hpp"

using namespace maller;

namespace {

// circle positions with a nonuniform density f(t) ~ 1 + 0.8 sin(2 pi t)
// via inverse-cdf sampling of the angle parameter
Dataset nonuniform_circle(int n, std::uint64_t seed, std::vector<double>* arc) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds;
  ds.predictors.resize(n, 2);
  ds.responses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double u = unif(rng);
    // solve F(t) = t - (0.4/pi)(cos(2 pi t) - 1) = u by bisection
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f =
          mid - 0.4 / M_PI * (std::cos(2.0 * M_PI * mid) - 1.0);
      (f < u ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    const double s = 2.0 * M_PI * t;  // arc length on the unit circle
    ds.predictors(i, 0) = std::cos(s);
    ds.predictors(i, 1) = std::sin(s);
    if (arc) arc->push_back(s);
  }
  return ds;
}

}  // namespace

TEST_SUITE_BEGIN("laplace");

TEST_CASE("single point random walk") {
  Dataset ds;
  ds.predictors = Eigen::MatrixXd::Zero(1, 2);
  ds.responses = Eigen::VectorXd::Zero(1);
  auto [a, l0] = build_random_walk(ds, 0.5, Kernel::gauss7());
  CHECK(a.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(l0.matrix(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("random walk rows are stochastic") {
  const Dataset ds = sample_torus(150, {5.0, 0.0}, 3);
  auto [a, l0] = build_random_walk(ds, 0.8, Kernel::gauss7());
  CHECK(a.matrix.minCoeff() >= 0.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(150);
  CHECK(((a.matrix * ones).array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((l0.matrix * ones).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("three collinear points against the hand-computed walk") {
  // spacing a with sqrt(h) between a and 2a: only adjacent pairs interact
  const double a = 0.1;
  Dataset ds;
  ds.predictors.resize(3, 1);
  ds.predictors << 0.0, a, 2.0 * a;
  ds.responses = Eigen::VectorXd::Zero(3);
  const double h = 0.0225;  // sqrt(h) = 0.15
  const double k = std::exp(-7.0 * a * a / h);

  Eigen::Matrix3d w;
  w << 1, k, 0, k, 1, k, 0, k, 1;
  Eigen::Matrix3d a_oracle;
  for (int i = 0; i < 3; ++i) a_oracle.row(i) = w.row(i) / w.row(i).sum();

  auto [awalk, l0] = build_random_walk(ds, h, Kernel::gauss7());
  CHECK((awalk.matrix - a_oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("density-normalized generator kills constants") {
  const Dataset ds = sample_torus(150, {5.0, 0.0}, 5);
  const OperatorMatrix l1 = build_density_normalized(ds, 0.8, Kernel::gauss7());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(150);
  CHECK((l1.matrix * ones).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("uniform grid makes the normalization a no-op") {
  // exact grid on the flat torus: all degrees equal, so L1 == L0
  const int side = 20;
  Dataset ds;
  ds.predictors.resize(side * side, 4);
  ds.responses = Eigen::VectorXd::Zero(side * side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const double u = 2.0 * M_PI * i / side, v = 2.0 * M_PI * j / side;
      ds.predictors.row(i * side + j) << std::cos(u), std::sin(u), std::cos(v),
          std::sin(v);
    }
  const double h = 0.35;
  auto [a, l0] = build_random_walk(ds, h, Kernel::gauss7());
  const OperatorMatrix l1 = build_density_normalized(ds, h, Kernel::gauss7());
  const double scale = l0.matrix.cwiseAbs().maxCoeff();
  CHECK((l1.matrix - l0.matrix).cwiseAbs().maxCoeff() < 0.05 * scale);
}

TEST_CASE("density normalization improves the laplacian on nonuniform data") {
  std::vector<double> arc;
  const Dataset ds = nonuniform_circle(2500, 7, &arc);
  const int n = int(ds.n());
  // test function and its laplacian in arc length on the unit circle
  Eigen::VectorXd m(n), lap(n);
  for (int i = 0; i < n; ++i) {
    m(i) = std::sin(arc[std::size_t(i)]);
    lap(i) = -std::sin(arc[std::size_t(i)]);
  }
  const double h = 0.004;
  auto [a, l0] = build_random_walk(ds, h, Kernel::gauss7());
  const OperatorMatrix l1 = build_density_normalized(ds, h, Kernel::gauss7());
  const double scale = delta_unit_scale(Kernel::gauss7(), 1);
  const double err0 = (scale * (l0.matrix * m) - lap).norm();
  const double err1 = (scale * (l1.matrix * m) - lap).norm();
  CHECK(err1 < err0);
}

TEST_CASE("maller operator rows sum to one and the generator kills affine") {
  const Dataset ds = sample_interval(500, 9);
  auto [ap, lp] = build_maller_operator(ds, 0.02, 0.0005, 1, Kernel::gauss7());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(500);
  CHECK(((ap.matrix * ones).array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK((lp.matrix * ones).cwiseAbs().maxCoeff() < 1e-8);
  // the local fits are exact on globally affine responses, boundary included
  CHECK((lp.matrix * ds.predictors.col(0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("spectrum of a diagonal operator") {
  OperatorMatrix op;
  op.kind = OperatorKind::Lp;
  op.h = 1.0;
  op.matrix = Eigen::MatrixXd::Zero(6, 6);
  op.matrix.diagonal() << 0.0, -0.01, -2.0, -2.02, -6.0, -9.0;
  const SpectrumReport rep = spectrum(op, 6, 1.0, GapRule::absolute(0.5));
  CHECK(rep.eigenvalues(0).real() == doctest::Approx(0.0));
  CHECK(rep.eigenvalues(5).real() == doctest::Approx(-9.0));
  REQUIRE(rep.clusters.size() == 4);
  CHECK(rep.clusters[0].size() == 2);
  CHECK(rep.clusters[1].size() == 2);
  CHECK(rep.clusters[2].size() == 1);
  CHECK(rep.clusters[3].size() == 1);
  CHECK(rep.residuals.maxCoeff() < 1e-6);

  const SpectrumReport zero =
      spectrum(OperatorMatrix{OperatorKind::L0, 1.0,
                              Eigen::MatrixXd::Zero(4, 4), 0.0},
               4);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(zero.eigenvalues(i)) == doctest::Approx(0.0));
}

TEST_CASE("delta unit scale against closed-form moments") {
  // mu_{1,0} and mu_{1,2} of exp(-7 t^2) on the disk have elementary forms
  const double e7 = std::exp(-7.0);
  const double i1 = (1.0 - e7) / 14.0;               // int t K dt
  const double i3 = 0.5 * (1.0 - 8.0 * e7) / 49.0;   // int t^3 K dt
  const double expected = 2.0 * 2.0 * i1 / i3;
  CHECK(delta_unit_scale(Kernel::gauss7(), 2) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("interval generator has a two-dimensional kernel at zero") {
  const Dataset ds = sample_interval(400, 11);
  auto [ap, lp] = build_maller_operator(ds, 0.02, 0.0005, 1, Kernel::gauss7());
  const double scale = delta_unit_scale(Kernel::gauss7(), 1);
  const SpectrumReport rep = spectrum(lp, 6, scale);
  CHECK(std::abs(rep.eigenvalues(0).real()) < 0.5);
  CHECK(std::abs(rep.eigenvalues(1).real()) < 0.5);
  CHECK(rep.residuals.maxCoeff() < 1e-6);
}

TEST_CASE("spectrum csv export") {
  OperatorMatrix op;
  op.kind = OperatorKind::L0;
  op.h = 1.0;
  op.matrix = Eigen::MatrixXd::Zero(3, 3);
  op.matrix.diagonal() << 0.0, -1.0, -5.0;
  const SpectrumReport rep = spectrum(op, 3, 1.0, GapRule::absolute(0.5));
  const std::string path = "/tmp/maller_test_spectrum.csv";
  write_spectrum_csv(path, rep);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,real,imag,cluster_id,residual");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  std::remove(path.c_str());
}

TEST_SUITE_END();
