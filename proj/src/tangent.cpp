#include "maller/tangent.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace maller {

namespace {

void fix_column_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0.0) basis.col(j) = -basis.col(j);
  }
}

}  // namespace

TangentFrame local_pca_from_neighbors(const Dataset& ds,
                                      const Eigen::VectorXd& x, int d,
                                      double h_pca,
                                      const std::vector<int>& neighbor_idx) {
  const int n_local = int(neighbor_idx.size());
  if (n_local < d + 1)
    throw InsufficientNeighbors(
        "local_pca: " + std::to_string(n_local) + " true neighbors, need " +
            std::to_string(d + 1),
        n_local, d + 1);
  const Eigen::Index p = ds.p();

  Eigen::MatrixXd centered(n_local, p);
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(p);
  for (int i = 0; i < n_local; ++i) mu += ds.predictors.row(neighbor_idx[std::size_t(i)]);
  mu /= double(n_local);
  for (int i = 0; i < n_local; ++i)
    centered.row(i) = ds.predictors.row(neighbor_idx[std::size_t(i)]) - mu;

  TangentFrame frame;
  frame.x = x;
  frame.h_pca = h_pca;
  frame.n_local = n_local;
  frame.basis.resize(p, d);

  const double inv_n = 1.0 / double(ds.n());
  if (p <= 3 * Eigen::Index(n_local)) {
    Eigen::MatrixXd sigma = inv_n * centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success)
      throw EigenSolverError("local_pca: covariance eigensolver failed");
    for (int k = 0; k < d; ++k)
      frame.basis.col(k) = es.eigenvectors().col(p - 1 - k);
  } else {
    // Gram trick for p >> n_local: eigenvectors of the small N x N Gram
    // matrix lift to the covariance eigenvectors.
    Eigen::MatrixXd gram = inv_n * centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
      throw EigenSolverError("local_pca: Gram eigensolver failed");
    for (int k = 0; k < d; ++k) {
      Eigen::VectorXd u = centered.transpose() * es.eigenvectors().col(n_local - 1 - k);
      const double norm = u.norm();
      if (norm < 1e-12) {
        // degenerate direction: fall back to any unit vector orthogonal to
        // the ones already chosen
        u = Eigen::VectorXd::Zero(p);
        u(k % p) = 1.0;
        for (int m = 0; m < k; ++m) u -= frame.basis.col(m).dot(u) * frame.basis.col(m);
        if (u.norm() < 1e-12) u = Eigen::VectorXd::Unit(p, (k + 1) % p);
        u.normalize();
      } else {
        u /= norm;
      }
      frame.basis.col(k) = u;
    }
  }
  fix_column_signs(frame.basis);
  return frame;
}

TangentFrame local_pca(const Dataset& ds, const Eigen::VectorXd& x, int d,
                       double h_pca, const FilterParams& filter,
                       const NeighborIndex* index) {
  if (d < 1) throw Error("local_pca: dimension must be positive");
  if (d > ds.p()) throw Error("local_pca: dimension exceeds ambient dimension");
  if (h_pca <= 0.0) throw Error("local_pca: bandwidth must be positive");
  NeighborSet nbrs = true_neighbors(ds, x, h_pca, filter, index);
  return local_pca_from_neighbors(ds, x, d, h_pca, nbrs.indices);
}

Eigen::MatrixXd tangent_coords(const TangentFrame& frame,
                               const Eigen::MatrixXd& points) {
  if (points.cols() != frame.basis.rows())
    throw Error("tangent_coords: ambient dimension mismatch");
  return (points.rowwise() - frame.x.transpose()) * frame.basis;
}

}  // namespace maller
