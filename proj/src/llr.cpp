#include "maller/llr.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "maller/simd.hpp"

namespace maller {

namespace {

constexpr double kHEscalation = 1.5;

struct SolveResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd minv_e1;  // first column of the (possibly ridged) inverse
  bool ridged = false;
  bool ok = false;
};

// Weighted normal equations with the ridge fallback on the slope block.
// The ridge leaves the first row/column of M untouched, so the fit still
// reproduces constants exactly.
SolveResult solve_weighted(const Eigen::MatrixXd& design,
                           const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& responses,
                           double cond_limit) {
  SolveResult out;
  const Eigen::Index q = design.cols();
  Eigen::MatrixXd m = design.transpose() * weights.asDiagonal() * design;
  Eigen::VectorXd b = design.transpose() * (weights.array() * responses.array()).matrix();

  auto try_solve = [&](const Eigen::MatrixXd& mat) -> bool {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
    if (es.info() != Eigen::Success) return false;
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(q - 1);
    if (!(lo > 0.0) || hi / lo > cond_limit) return false;
    const Eigen::VectorXd inv = es.eigenvalues().cwiseInverse();
    out.beta = es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * b));
    out.minv_e1 = es.eigenvectors() * (inv.asDiagonal() * es.eigenvectors().row(0).transpose());
    return true;
  };

  if (try_solve(m)) {
    out.ok = true;
    return out;
  }
  const double trace = m.trace();
  if (!(trace > 0.0)) return out;  // no usable weight mass at all
  Eigen::MatrixXd ridged = m;
  ridged.bottomRightCorner(q - 1, q - 1).diagonal().array() +=
      1e-10 * trace / double(q);
  if (try_solve(ridged)) {
    out.ok = true;
    out.ridged = true;
  }
  return out;
}

}  // namespace

double LocalFit::predict(const Eigen::VectorXd& responses) const {
  if (responses.size() != n)
    throw Error("LocalFit::predict: response length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i)
    acc += row(Eigen::Index(i)) * responses(indices[i]);
  return acc;
}

Eigen::VectorXd LocalFit::dense_row() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < indices.size(); ++i)
    out(indices[i]) = row(Eigen::Index(i));
  return out;
}

namespace {

// Single fit attempt from an already-filtered neighbor set.
bool fit_from_indices(const Dataset& ds, const Eigen::VectorXd& x,
                      const TangentFrame& frame, double h_cur,
                      const Kernel& kernel, const std::vector<int>& indices,
                      bool filtered, double cond_limit, LocalFit& out) {
  const int m = int(indices.size());
  if (m == 0) return false;
  const Eigen::Index p = ds.p();
  const Eigen::Index d = frame.basis.cols();

  // gather rows, squared distances, kernel weights
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts(m, p);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    pts.row(i) = ds.predictors.row(indices[std::size_t(i)]);
    y(i) = ds.responses(indices[std::size_t(i)]);
  }
  Eigen::VectorXd d2(m);
  simd::squared_distances(pts.data(), std::size_t(m), std::size_t(p), x.data(),
                          d2.data());
  Eigen::VectorXd w(m);
  kernel.weights_from_sq_dists({d2.data(), std::size_t(m)}, h_cur,
                               {w.data(), std::size_t(m)});

  Eigen::MatrixXd design(m, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = (pts.rowwise() - x.transpose()) * frame.basis;

  SolveResult sol = solve_weighted(design, w, y, cond_limit);
  if (!sol.ok) return false;

  out.x = x;
  out.h_used = h_cur;
  out.beta = sol.beta;
  out.frame = frame;
  out.indices = indices;
  out.row = (w.array() * (design * sol.minv_e1).array()).matrix();
  out.v1_minv_v1 = sol.minv_e1(0);
  out.k0 = kernel(0.0);
  out.n_eff = m;
  out.ridged = sol.ridged;
  out.filtered = filtered;
  out.n = ds.n();
  return true;
}

}  // namespace

LocalFit fit_local(const Dataset& ds, const Eigen::VectorXd& x,
                   const TangentFrame& frame, double h, const Kernel& kernel,
                   const FitOptions& options, const NeighborIndex* index) {
  if (h <= 0.0) throw Error("fit_local: bandwidth must be positive");
  LocalFit fit;
  fit.h = h;
  bool saw_neighbors = false;
  double h_cur = h;
  for (int attempt = 0; attempt <= options.max_h_escalations;
       ++attempt, h_cur *= kHEscalation) {
    NeighborSet nbrs = true_neighbors(ds, x, h_cur, options.filter, index);
    if (nbrs.indices.empty()) continue;
    saw_neighbors = true;
    if (fit_from_indices(ds, x, frame, h_cur, kernel, nbrs.indices,
                         nbrs.filtered, options.cond_limit, fit))
      return fit;
  }
  if (!saw_neighbors)
    throw NoDataError("fit_local: no neighbors within the escalated radius");
  throw SingularFit("fit_local: normal equations singular after ridge and bandwidth escalation");
}

double estimate_m(const LocalFit& fit) { return fit.beta(0); }

Eigen::VectorXd estimate_gradient(const LocalFit& fit) {
  const Eigen::Index d = fit.frame.basis.cols();
  return fit.frame.basis * fit.beta.tail(d);
}

Eigen::VectorXd smoothing_row(const Dataset& ds, const Eigen::VectorXd& x,
                              const TangentFrame& frame, double h,
                              const Kernel& kernel, const FitOptions& options,
                              const NeighborIndex* index) {
  return fit_local(ds, x, frame, h, kernel, options, index).dense_row();
}

FitEngine::FitEngine(const Dataset& ds, int d, Kernel kernel, FitOptions options)
    : ds_(ds), d_(d), kernel_(std::move(kernel)), options_(options),
      index_(ds.predictors) {
  if (d < 1 || d > ds.p())
    throw Error("FitEngine: intrinsic dimension out of range");
}

TangentFrame FitEngine::frame_at(const Eigen::VectorXd& x) const {
  double h_pca = options_.h_pca;
  for (int attempt = 0;; ++attempt) {
    try {
      return local_pca(ds_, x, d_, h_pca, options_.filter, &index_);
    } catch (const InsufficientNeighbors&) {
      if (attempt >= options_.max_hpca_escalations) throw;
      h_pca *= kHEscalation;
    }
  }
}

LocalFit FitEngine::fit(const Eigen::VectorXd& x, double h) const {
  Query q(*this, x, h);
  return q.fit(h);
}

FitEngine::Query::Query(const FitEngine& engine, const Eigen::VectorXd& x,
                        double h_max)
    : engine_(&engine), h_max_(h_max),
      cache_(engine.ds_, engine.index_, x,
             h_max * std::pow(kHEscalation, engine.options_.max_h_escalations)) {}

const TangentFrame& FitEngine::Query::frame() {
  if (!frame_) {
    const FitOptions& opt = engine_->options_;
    double h_pca = opt.h_pca;
    for (int attempt = 0;; ++attempt) {
      try {
        if (h_pca <= cache_.delta_max()) {
          NeighborSet nbrs = cache_.neighbors(h_pca, opt.filter);
          frame_ = local_pca_from_neighbors(engine_->ds_, cache_.query(),
                                            engine_->d_, h_pca, nbrs.indices);
        } else {
          frame_ = local_pca(engine_->ds_, cache_.query(), engine_->d_, h_pca,
                             opt.filter, &engine_->index_);
        }
        break;
      } catch (const InsufficientNeighbors&) {
        if (attempt >= opt.max_hpca_escalations) throw;
        h_pca *= kHEscalation;
      }
    }
  }
  return *frame_;
}

LocalFit FitEngine::Query::fit(double h) {
  if (h <= 0.0) throw Error("fit: bandwidth must be positive");
  const FitOptions& opt = engine_->options_;
  LocalFit out;
  out.h = h;
  const TangentFrame& fr = frame();
  bool saw_neighbors = false;
  double h_cur = h;
  for (int attempt = 0; attempt <= opt.max_h_escalations;
       ++attempt, h_cur *= kHEscalation) {
    NeighborSet nbrs = cache_.neighbors(h_cur, opt.filter);
    if (nbrs.indices.empty()) continue;
    saw_neighbors = true;
    if (fit_from_indices(engine_->ds_, cache_.query(), fr, h_cur,
                         engine_->kernel_, nbrs.indices, nbrs.filtered,
                         opt.cond_limit, out))
      return out;
  }
  if (!saw_neighbors)
    throw NoDataError("fit: no neighbors within the escalated radius");
  throw SingularFit("fit: normal equations singular after ridge and bandwidth escalation");
}

}  // namespace maller
