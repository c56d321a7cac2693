#pragma once

#include <Eigen/Core>

#include <complex>
#include <string>
#include <vector>

#include "maller/dataset.hpp"
#include "maller/kernels.hpp"
#include "maller/llr.hpp"

namespace maller {

enum class OperatorKind { A, L0, L1, Ap, Lp };

/// Dense n x n graph operator. Row-sum invariants by kind: A and Ap rows sum
/// to one (Ap entries may be negative); L0/L1/Lp rows sum to zero.
struct OperatorMatrix {
  OperatorKind kind = OperatorKind::A;
  double h = 0.0;
  Eigen::MatrixXd matrix;
  double h_pca = 0.0;  // Ap/Lp only
};

/// Random-walk pair: A = D^-1 W with W(i,j) = K(|Xi - Xj|/sqrt(h)), and the
/// generator L0 = h^-1 (A - I).
std::pair<OperatorMatrix, OperatorMatrix> build_random_walk(
    const Dataset& ds, double h, const Kernel& kernel);

/// Density-normalized generator: W1 = D^-1 W D^-1, D1 = rowsum(W1),
/// L1 = h^-1 (D1^-1 W1 - I).
OperatorMatrix build_density_normalized(const Dataset& ds, double h,
                                        const Kernel& kernel);

/// Smoothing matrix of the tangent-plane LLR (row i = smoothing row at X_i)
/// and its generator Lp = h^-1 (Ap - I).
std::pair<OperatorMatrix, OperatorMatrix> build_maller_operator(
    const Dataset& ds, double h, double h_pca, int d, const Kernel& kernel,
    const FilterParams& filter = {});

/// Eigenvalue grouping tolerance: either an absolute gap or a gap relative to
/// the magnitudes of adjacent eigenvalues.
struct GapRule {
  enum class Mode { absolute, relative } mode = Mode::relative;
  double value = 0.15;
  static GapRule absolute(double v) { return {Mode::absolute, v}; }
  static GapRule relative(double v) { return {Mode::relative, v}; }
};

struct SpectrumReport {
  Eigen::VectorXcd eigenvalues;           // k values, descending real part
  std::vector<std::vector<int>> clusters; // indices grouped by the gap rule
  Eigen::VectorXd residuals;              // |Av - lambda v| / |v| per pair
  Eigen::MatrixXcd vectors;               // matching right eigenvectors
};

/// k eigenvalues of largest real part of (scale * op.matrix), their right
/// eigenvectors and residuals, grouped into multiplicity clusters. Dense
/// general (nonsymmetric) solve.
SpectrumReport spectrum(const OperatorMatrix& op, int k, double scale = 1.0,
                        const GapRule& gap = {});

/// 2d / mu_{1,2} for the mu_{1,0}=1 normalization of the kernel: multiplying
/// Lp by this converts its leading term into Laplace-Beltrami units.
double delta_unit_scale(const Kernel& kernel, int d);

/// CSV export with columns index, real, imag, cluster_id, residual.
void write_spectrum_csv(const std::string& path, const SpectrumReport& report);

}  // namespace maller
