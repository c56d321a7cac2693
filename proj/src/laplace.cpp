#include "maller/laplace.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "maller/simd.hpp"

namespace maller {

namespace {

// W(i,j) = K(|Xi - Xj| / sqrt(h)); includes the diagonal K(0).
Eigen::MatrixXd kernel_graph(const Dataset& ds, double h, const Kernel& kernel) {
  const Eigen::Index n = ds.n();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts =
      ds.predictors;
  Eigen::MatrixXd w(n, n);
  Eigen::VectorXd d2(n), wr(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd q = ds.predictors.row(i).transpose();
    simd::squared_distances(pts.data(), std::size_t(n), std::size_t(ds.p()),
                            q.data(), d2.data());
    kernel.weights_from_sq_dists({d2.data(), std::size_t(n)}, h,
                                 {wr.data(), std::size_t(n)});
    w.row(i) = wr.transpose();
  }
  // exact symmetry is worth enforcing against rounding in the distance order
  w = 0.5 * (w + w.transpose()).eval();
  return w;
}

}  // namespace

std::pair<OperatorMatrix, OperatorMatrix> build_random_walk(
    const Dataset& ds, double h, const Kernel& kernel) {
  if (h <= 0.0) throw Error("build_random_walk: bandwidth must be positive");
  const Eigen::Index n = ds.n();
  Eigen::MatrixXd w = kernel_graph(ds, h, kernel);
  const Eigen::VectorXd deg = w.rowwise().sum();

  OperatorMatrix a;
  a.kind = OperatorKind::A;
  a.h = h;
  a.matrix = deg.cwiseInverse().asDiagonal() * w;

  OperatorMatrix l0;
  l0.kind = OperatorKind::L0;
  l0.h = h;
  l0.matrix = (a.matrix - Eigen::MatrixXd::Identity(n, n)) / h;
  return {std::move(a), std::move(l0)};
}

OperatorMatrix build_density_normalized(const Dataset& ds, double h,
                                        const Kernel& kernel) {
  if (h <= 0.0)
    throw Error("build_density_normalized: bandwidth must be positive");
  const Eigen::Index n = ds.n();
  Eigen::MatrixXd w = kernel_graph(ds, h, kernel);
  const Eigen::VectorXd deg = w.rowwise().sum();
  Eigen::MatrixXd w1 = deg.cwiseInverse().asDiagonal() * w *
                       deg.cwiseInverse().asDiagonal();
  const Eigen::VectorXd deg1 = w1.rowwise().sum();

  OperatorMatrix l1;
  l1.kind = OperatorKind::L1;
  l1.h = h;
  l1.matrix = (deg1.cwiseInverse().asDiagonal() * w1 -
               Eigen::MatrixXd::Identity(n, n)) /
              h;
  return l1;
}

std::pair<OperatorMatrix, OperatorMatrix> build_maller_operator(
    const Dataset& ds, double h, double h_pca, int d, const Kernel& kernel,
    const FilterParams& filter) {
  if (h <= 0.0) throw Error("build_maller_operator: bandwidth must be positive");
  const Eigen::Index n = ds.n();

  FitOptions options;
  options.h_pca = h_pca;
  options.filter = filter;
  FitEngine engine(ds, d, kernel, options);

  OperatorMatrix ap;
  ap.kind = OperatorKind::Ap;
  ap.h = h;
  ap.h_pca = h_pca;
  ap.matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      const LocalFit fit = engine.fit(ds.predictors.row(i).transpose(), h);
      ap.matrix.row(i) = fit.dense_row().transpose();
    } catch (const Error& e) {
      throw Error("build_maller_operator: row " + std::to_string(i) +
                  " failed: " + e.what());
    }
  }

  OperatorMatrix lp;
  lp.kind = OperatorKind::Lp;
  lp.h = h;
  lp.h_pca = h_pca;
  lp.matrix = (ap.matrix - Eigen::MatrixXd::Identity(n, n)) / h;
  return {std::move(ap), std::move(lp)};
}

SpectrumReport spectrum(const OperatorMatrix& op, int k, double scale,
                        const GapRule& gap) {
  const Eigen::Index n = op.matrix.rows();
  if (k < 1 || k > n) throw Error("spectrum: k out of range");

  // dense general eigenproblem via LAPACK dgeev (column-major copy)
  Eigen::MatrixXd a = scale * op.matrix;
  Eigen::VectorXd wr(n), wi(n);
  Eigen::MatrixXd vr(n, n);
  const lapack_int info = LAPACKE_dgeev(
      LAPACK_COL_MAJOR, 'N', 'V', lapack_int(n), a.data(), lapack_int(n),
      wr.data(), wi.data(), nullptr, 1, vr.data(), lapack_int(n));
  if (info != 0)
    throw EigenSolverError("spectrum: dgeev failed with info=" +
                           std::to_string(info));

  // unpack conjugate pairs into complex vectors
  Eigen::MatrixXcd vectors(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (wi(j) > 0.0 && j + 1 < n) {
      vectors.col(j) = vr.col(j) + std::complex<double>(0, 1) * vr.col(j + 1);
      vectors.col(j + 1) = vr.col(j) - std::complex<double>(0, 1) * vr.col(j + 1);
      ++j;
    } else if (wi(j) == 0.0) {
      vectors.col(j) = vr.col(j).cast<std::complex<double>>();
    }
  }
  std::vector<int> order(static_cast<std::size_t>(n), 0);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (wr(x) != wr(y)) return wr(x) > wr(y);
    return wi(x) > wi(y);
  });

  const Eigen::MatrixXd scaled = scale * op.matrix;
  SpectrumReport report;
  report.eigenvalues.resize(k);
  report.vectors.resize(n, k);
  report.residuals.resize(k);
  for (int i = 0; i < k; ++i) {
    const int j = order[std::size_t(i)];
    const std::complex<double> lambda(wr(j), wi(j));
    report.eigenvalues(i) = lambda;
    report.vectors.col(i) = vectors.col(j);
    const double vnorm = report.vectors.col(i).norm();
    if (vnorm > 0.0) {
      const Eigen::VectorXcd resid =
          scaled * report.vectors.col(i) - lambda * report.vectors.col(i);
      report.residuals(i) = resid.norm() / vnorm;
    } else {
      report.residuals(i) = std::numeric_limits<double>::infinity();
    }
  }

  // group into multiplicity clusters by the gap rule on the real parts
  std::vector<int> current{0};
  for (int i = 1; i < k; ++i) {
    const double prev = report.eigenvalues(i - 1).real();
    const double cur = report.eigenvalues(i).real();
    double tol = gap.value;
    if (gap.mode == GapRule::Mode::relative)
      tol = gap.value * std::max({std::abs(prev), std::abs(cur), 1e-12});
    if (prev - cur > tol) {
      report.clusters.push_back(current);
      current.clear();
    }
    current.push_back(i);
  }
  report.clusters.push_back(current);
  return report;
}

double delta_unit_scale(const Kernel& kernel, int d) {
  const double m10 = kernel_moment(kernel, 1, 0, d);
  const double m12 = kernel_moment(kernel, 1, 2, d);
  return 2.0 * double(d) * m10 / m12;
}

void write_spectrum_csv(const std::string& path, const SpectrumReport& report) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "index,real,imag,cluster_id,residual\n";
  std::vector<int> cluster_of(std::size_t(report.eigenvalues.size()), -1);
  for (std::size_t c = 0; c < report.clusters.size(); ++c)
    for (int i : report.clusters[c]) cluster_of[std::size_t(i)] = int(c);
  for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
    out << i << "," << report.eigenvalues(i).real() << ","
        << report.eigenvalues(i).imag() << "," << cluster_of[std::size_t(i)]
        << "," << report.residuals(i) << "\n";
  }
}

}  // namespace maller
