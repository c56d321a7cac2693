#include "maller/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace maller {

double grid_upper_bound(int d) {
  if (d < 1) throw Error("grid_upper_bound: dimension must be positive");
  if (d == 1) return 0.1;
  const double ratio =
      double(d) * std::tgamma(0.5 * d) / (std::sqrt(M_PI) * std::tgamma(0.5 * (d + 1)));
  return 0.25 * std::pow(ratio, 2.0 / d) * std::pow(0.1, 1.0 / d);
}

BandwidthGrid candidate_grid(int d, int count, double lo, double hi) {
  if (count < 1) throw Error("candidate_grid: need at least one candidate");
  if (hi <= 0.0) hi = grid_upper_bound(d);
  if (lo <= 0.0 || hi < lo) throw Error("candidate_grid: bad range");
  BandwidthGrid grid;
  grid.d = d;
  grid.values.resize(std::size_t(count));
  if (count == 1) {
    grid.values[0] = lo;
    return grid;
  }
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    grid.values[std::size_t(i)] =
        std::exp(llo + (lhi - llo) * double(i) / double(count - 1));
  return grid;
}

double mgcv(const FitEngine& engine, double h, const std::vector<int>& block,
            const Eigen::VectorXd& responses) {
  if (block.empty()) throw Error("mgcv: empty block");
  if (responses.size() != engine.data().n())
    throw Error("mgcv: response length mismatch");
  double rss = 0.0;
  double atr = 0.0;
  for (int j : block) {
    try {
      LocalFit fit = engine.fit(engine.data().predictors.row(j).transpose(), h);
      const double mhat = fit.predict(responses);
      const double r = responses(j) - mhat;
      rss += r * r;
      // v1'(X'WX)^-1 v1 h^{-d/2} K(0) with the paper's scaled weights equals
      // v1'(X'W_raw X)^-1 v1 K(0) with the raw weights used here.
      atr += fit.v1_minv_v1 * fit.k0;
    } catch (const Error& e) {
      throw Error("mgcv: fit failed at block index " + std::to_string(j) +
                  " (h=" + std::to_string(h) + "): " + e.what());
    }
  }
  const double n1 = double(block.size());
  return (1.0 + 2.0 * atr / n1) * (rss / n1);
}

double select_mgcv(const FitEngine& engine, const BandwidthGrid& grid,
                   const std::vector<int>& block,
                   const Eigen::VectorXd& responses) {
  if (grid.values.empty()) throw Error("select_mgcv: empty grid");
  if (block.empty()) throw Error("select_mgcv: empty block");
  if (responses.size() != engine.data().n())
    throw Error("select_mgcv: response length mismatch");

  const double h_max = grid.values.back();
  std::vector<double> rss(grid.values.size(), 0.0);
  std::vector<double> atr(grid.values.size(), 0.0);
  std::vector<char> ok(grid.values.size(), 1);

  // block-point outer loop so the neighbor cache is reused across the grid
  for (int j : block) {
    FitEngine::Query q = engine.query(
        engine.data().predictors.row(j).transpose(), h_max);
    for (std::size_t gi = 0; gi < grid.values.size(); ++gi) {
      if (!ok[gi]) continue;
      try {
        LocalFit fit = q.fit(grid.values[gi]);
        const double r = responses(j) - fit.predict(responses);
        rss[gi] += r * r;
        atr[gi] += fit.v1_minv_v1 * fit.k0;
      } catch (const Error&) {
        ok[gi] = 0;
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  double h_best = -1.0;
  const double n1 = double(block.size());
  // ascending grid + strict comparison = ties break toward the smaller h
  for (std::size_t gi = 0; gi < grid.values.size(); ++gi) {
    if (!ok[gi]) continue;
    const double score = (1.0 + 2.0 * atr[gi] / n1) * (rss[gi] / n1);
    if (score < best) {
      best = score;
      h_best = grid.values[gi];
    }
  }
  if (h_best < 0.0)
    throw Error("select_mgcv: every candidate bandwidth failed");
  return h_best;
}

Eigen::VectorXd estimate_variance(const FitEngine& engine, double pilot_m,
                                  double pilot_r) {
  const Eigen::Index n = engine.data().n();
  const Eigen::VectorXd& y = engine.data().responses;

  Eigen::VectorXd rhat(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const LocalFit fit =
        engine.fit(engine.data().predictors.row(l).transpose(), pilot_m);
    const double r = y(l) - fit.beta(0);
    rhat(l) = r * r;
  }

  const Eigen::VectorXd logr =
      (rhat.array() + 1.0 / double(n)).log().matrix();
  Eigen::VectorXd alpha0(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const LocalFit fit =
        engine.fit(engine.data().predictors.row(l).transpose(), pilot_r);
    alpha0(l) = fit.predict(logr);
  }

  // Multiplicative correction: the log-scale fit estimates log sigma^2 up to
  // the additive constant E log eps^2; the ratio below cancels it.
  const double corr =
      (rhat.array() * (-alpha0.array()).exp()).mean();
  return (alpha0.array().exp() * corr).matrix();
}

double estimate_bias(FitEngine::Query& query, double h) {
  const double m_h = query.fit(h).beta(0);
  const double m_half = query.fit(0.5 * h).beta(0);
  return 2.0 * (m_h - m_half);
}

double estimate_fit_variance(const LocalFit& fit, const Eigen::VectorXd& sigma2) {
  if (sigma2.size() != fit.n)
    throw Error("estimate_fit_variance: sigma2 length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < fit.indices.size(); ++i) {
    const double w = fit.row(Eigen::Index(i));
    acc += w * w * sigma2(fit.indices[i]);
  }
  return acc;
}

PointSelection select_optimal(FitEngine::Query& query, const BandwidthGrid& grid,
                              const Eigen::VectorXd& sigma2) {
  if (grid.values.empty()) throw Error("select_optimal: empty grid");
  PointSelection sel;
  sel.bias.resize(grid.values.size(), 0.0);
  sel.variance.resize(grid.values.size(), 0.0);
  sel.valid.resize(grid.values.size(), 0);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t gi = 0; gi < grid.values.size(); ++gi) {
    try {
      const LocalFit fit = query.fit(grid.values[gi]);
      const double m_half = query.fit(0.5 * grid.values[gi]).beta(0);
      const double b = 2.0 * (fit.beta(0) - m_half);
      const double v = estimate_fit_variance(fit, sigma2);
      sel.bias[gi] = b;
      sel.variance[gi] = v;
      sel.valid[gi] = 1;
      best = std::min(best, b * b + v);
    } catch (const Error&) {
      // candidate skipped: h/2 (or h) not resolvable at this point
    }
  }
  if (!(best < std::numeric_limits<double>::infinity()))
    throw Error("select_optimal: no candidate bandwidth yielded a valid fit");
  // ties (within floating noise of the best) resolve toward the smaller h
  const double tie = best + std::max(1e-20, 1e-12 * best);
  for (std::size_t gi = 0; gi < grid.values.size(); ++gi) {
    if (sel.valid[gi] &&
        sel.bias[gi] * sel.bias[gi] + sel.variance[gi] <= tie) {
      sel.h_opt = grid.values[gi];
      break;
    }
  }
  return sel;
}

std::vector<int> sample_block(Eigen::Index n, int size, std::uint64_t seed) {
  std::vector<int> all(static_cast<std::size_t>(n), 0);
  std::iota(all.begin(), all.end(), 0);
  if (size >= n) return all;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::size_t(size));
  std::sort(all.begin(), all.end());
  return all;
}

BandwidthPlan make_bandwidth_plan(const FitEngine& engine,
                                  const BandwidthGrid& grid, int block_size,
                                  std::uint64_t seed) {
  BandwidthPlan plan;
  plan.grid = grid;
  plan.block = sample_block(engine.data().n(), block_size, seed);
  plan.pilot_m = select_mgcv(engine, grid, plan.block, engine.data().responses);

  // residuals at the pilot, then a second mGCV on the log scale
  const Eigen::Index n = engine.data().n();
  const Eigen::VectorXd& y = engine.data().responses;
  Eigen::VectorXd rhat(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const LocalFit fit =
        engine.fit(engine.data().predictors.row(l).transpose(), plan.pilot_m);
    const double r = y(l) - fit.beta(0);
    rhat(l) = r * r;
  }
  const Eigen::VectorXd logr = (rhat.array() + 1.0 / double(n)).log().matrix();
  plan.pilot_r = select_mgcv(engine, grid, plan.block, logr);

  Eigen::VectorXd alpha0(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const LocalFit fit =
        engine.fit(engine.data().predictors.row(l).transpose(), plan.pilot_r);
    alpha0(l) = fit.predict(logr);
  }
  const double corr = (rhat.array() * (-alpha0.array()).exp()).mean();
  plan.sigma2 = (alpha0.array().exp() * corr).matrix();
  return plan;
}

}  // namespace maller
