#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "maller/llr.hpp"

namespace maller {

/// Ascending candidate bandwidths. The default grid is 21 logarithmically
/// equispaced values on [0.01, 0.1] for d = 1 and on [0.01, h_d] for d > 1,
/// with h_d the volume-matched upper bound.
struct BandwidthGrid {
  std::vector<double> values;
  int d = 1;
};

/// h_d = (1/4) (d Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)))^(2/d) (0.1)^(1/d)
/// for d > 1; 0.1 for d = 1.
double grid_upper_bound(int d);

BandwidthGrid candidate_grid(int d, int count = 21, double lo = 0.01,
                             double hi = -1.0 /* rule-based when negative */);

/// Modified generalized cross-validation score of h over a block of sample
/// points:  (1 + 2 atr(h)) * mean squared residual, where atr averages the
/// smoother's self-weight v1'(X'WX)^-1 v1 h^{-d/2} K(0) over the block.
double mgcv(const FitEngine& engine, double h, const std::vector<int>& block,
            const Eigen::VectorXd& responses);

/// argmin of mGCV over the grid; ties break toward the smaller bandwidth.
double select_mgcv(const FitEngine& engine, const BandwidthGrid& grid,
                   const std::vector<int>& block,
                   const Eigen::VectorXd& responses);

/// Heteroscedastic variance estimate: squared pilot residuals are fitted on
/// the log scale, exponentiated, and rescaled by the average ratio
/// (1/n) sum_l r_l exp(-alpha0(X_l)) so the multiplicative bias of the
/// log-scale fit cancels.
Eigen::VectorXd estimate_variance(const FitEngine& engine, double pilot_m,
                                  double pilot_r);

/// b(x, h) = 2 [ m(x, h) - m(x, h/2) ].
double estimate_bias(FitEngine::Query& query, double h);

/// Sandwich variance of the fit: sum_l row_l^2 sigma2(X_l).
double estimate_fit_variance(const LocalFit& fit, const Eigen::VectorXd& sigma2);

/// Per-candidate plug-in MSE pieces and the selected bandwidth at one query.
struct PointSelection {
  double h_opt = 0.0;
  std::vector<double> bias;
  std::vector<double> variance;
  std::vector<char> valid;
};

/// argmin over the grid of b^2 + v; candidates whose h/2 fit fails are
/// skipped; ties break toward the smaller bandwidth; all-invalid errors.
PointSelection select_optimal(FitEngine::Query& query, const BandwidthGrid& grid,
                              const Eigen::VectorXd& sigma2);

/// Shared state of the two-pilot bandwidth pipeline.
struct BandwidthPlan {
  BandwidthGrid grid;
  std::vector<int> block;
  double pilot_m = 0.0;
  double pilot_r = 0.0;
  Eigen::VectorXd sigma2;
};

/// Seeded subsample of min(n, size) row indices, shared across candidates.
std::vector<int> sample_block(Eigen::Index n, int size, std::uint64_t seed);

/// Run the pilot selections and the variance stage.
BandwidthPlan make_bandwidth_plan(const FitEngine& engine,
                                  const BandwidthGrid& grid, int block_size,
                                  std::uint64_t seed);

}  // namespace maller
