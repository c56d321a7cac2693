#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "maller/dataset.hpp"
#include "maller/kernels.hpp"
#include "maller/neighbors.hpp"
#include "maller/tangent.hpp"

namespace maller {

/// A solved weighted local linear fit on the tangent plane. The smoothing row
/// (the linear functional mapping responses to the point estimate) is kept in
/// sparse form: `indices` lists the neighbor rows with nonzero weight and
/// `row` the matching weights; everything else is zero.
struct LocalFit {
  Eigen::VectorXd x;
  double h = 0.0;        // requested bandwidth
  double h_used = 0.0;   // bandwidth after any escalation
  Eigen::VectorXd beta;  // intercept, then d slope coefficients
  TangentFrame frame;
  std::vector<int> indices;
  Eigen::VectorXd row;
  double v1_minv_v1 = 0.0;  // v1' (X'WX)^-1 v1 with the raw kernel weights
  double k0 = 0.0;          // kernel value at 0 (includes any scale)
  int n_eff = 0;
  bool ridged = false;
  bool filtered = false;
  Eigen::Index n = 0;  // dataset size

  /// Apply the smoothing row to an arbitrary response vector of length n.
  double predict(const Eigen::VectorXd& responses) const;

  /// Smoothing row as a dense length-n vector.
  Eigen::VectorXd dense_row() const;

  double row_sum() const { return row.sum(); }
};

struct FitOptions {
  double h_pca = 0.015;
  FilterParams filter;
  int max_h_escalations = 3;     // x1.5 ladder for singular fits
  int max_hpca_escalations = 6;  // x1.5 ladder for thin PCA neighborhoods
  double cond_limit = 1e12;
};

/// Weighted LLR at x on the given tangent frame: weights K(|X_l - x|/sqrt(h))
/// over the cluster-filtered sqrt(h)-neighbors, design rows (1, B_x'(X_l - x)).
/// Near-singular normal equations get a ridge on the slope block (constant
/// reproduction stays exact); if that fails the bandwidth is escalated x1.5 up
/// to max_h_escalations times before erroring.
LocalFit fit_local(const Dataset& ds, const Eigen::VectorXd& x,
                   const TangentFrame& frame, double h, const Kernel& kernel,
                   const FitOptions& options = {},
                   const NeighborIndex* index = nullptr);

/// v1' beta = intercept: the regression estimate at x.
double estimate_m(const LocalFit& fit);

/// Slope coefficients mapped through the frame into the ambient space.
Eigen::VectorXd estimate_gradient(const LocalFit& fit);

/// Dense smoothing row at x (the row the operator module stacks into A_p).
Eigen::VectorXd smoothing_row(const Dataset& ds, const Eigen::VectorXd& x,
                              const TangentFrame& frame, double h,
                              const Kernel& kernel,
                              const FitOptions& options = {},
                              const NeighborIndex* index = nullptr);

/// Orchestrates repeated fits over one dataset: owns the spatial index,
/// computes tangent frames with the h_pca escalation ladder, and amortizes
/// neighbor queries across a bandwidth grid through per-query caches.
class FitEngine {
public:
  FitEngine(const Dataset& ds, int d, Kernel kernel, FitOptions options = {});

  const Dataset& data() const { return ds_; }
  int dim() const { return d_; }
  const Kernel& kernel() const { return kernel_; }
  const FitOptions& options() const { return options_; }
  const NeighborIndex& index() const { return index_; }

  /// Tangent frame at x, escalating h_pca until d+1 true neighbors exist.
  TangentFrame frame_at(const Eigen::VectorXd& x) const;

  /// One-shot fit (builds a throwaway query).
  LocalFit fit(const Eigen::VectorXd& x, double h) const;

  /// Per-query state reusable across bandwidths up to h_max.
  class Query {
  public:
    Query(const FitEngine& engine, const Eigen::VectorXd& x, double h_max);
    LocalFit fit(double h);
    const TangentFrame& frame();
    const Eigen::VectorXd& point() const { return cache_.query(); }

  private:
    const FitEngine* engine_;
    double h_max_;
    CandidateCache cache_;
    std::optional<TangentFrame> frame_;
  };

  Query query(const Eigen::VectorXd& x, double h_max) const {
    return Query(*this, x, h_max);
  }

private:
  friend class Query;
  const Dataset& ds_;
  int d_;
  Kernel kernel_;
  FitOptions options_;
  NeighborIndex index_;
};

}  // namespace maller
