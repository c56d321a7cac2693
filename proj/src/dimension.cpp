#include "maller/dimension.hpp"

#include <cmath>
#include <vector>

namespace maller {

DimensionEstimate mle_dimension(const Dataset& ds, int k_min, int k_max,
                                const NeighborIndex* index) {
  const int n = int(ds.n());
  if (k_min < 2) throw Error("mle_dimension: k_min must be at least 2");
  if (k_max < k_min) throw Error("mle_dimension: k_max < k_min");
  if (k_max >= n) throw Error("mle_dimension: k_max must be below n");

  std::unique_ptr<NeighborIndex> local;
  if (!index) {
    local = std::make_unique<NeighborIndex>(ds.predictors);
    index = local.get();
  }

  DimensionEstimate est;
  est.k_min = k_min;
  est.k_max = k_max;

  double sum = 0.0;
  long count = 0;
  std::vector<int> idx;
  std::vector<double> d2;
  std::vector<double> logt(std::size_t(k_max) + 1);

  for (int i = 0; i < n; ++i) {
    // k_max+1 nearest including the point itself; drop the self entry
    index->knn(ds.predictors.row(i).transpose(), k_max + 1, idx, d2);
    int self = -1;
    for (std::size_t j = 0; j < idx.size(); ++j)
      if (idx[j] == i) {
        self = int(j);
        break;
      }
    if (self < 0) self = 0;  // duplicate closer than representation: drop first
    int m = 0;
    for (std::size_t j = 0; j < idx.size() && m < k_max; ++j) {
      if (int(j) == self) continue;
      logt[std::size_t(m++)] =
          d2[j] > 0.0 ? 0.5 * std::log(d2[j]) : std::nan("");
    }
    for (int k = k_min; k <= k_max && k <= m; ++k) {
      const double log_tk = logt[std::size_t(k - 1)];
      if (std::isnan(log_tk)) {
        ++est.excluded;
        continue;
      }
      double acc = 0.0;
      int terms = 0;
      for (int j = 1; j <= k - 1; ++j) {
        const double log_tj = logt[std::size_t(j - 1)];
        if (std::isnan(log_tj)) {
          ++est.excluded;
          continue;
        }
        acc += log_tk - log_tj;
        ++terms;
      }
      if (terms == 0 || acc <= 0.0) {
        ++est.excluded;
        continue;
      }
      sum += double(terms) / acc;
      ++count;
    }
  }

  if (count == 0)
    throw DegenerateDataset(
        "mle_dimension: all neighbor-distance ratios degenerate "
        "(duplicated points?)");
  est.raw = sum / double(count);
  est.d_hat = int(std::floor(est.raw + 0.5));  // ties round up
  est.d_hat = std::max(1, std::min(est.d_hat, int(ds.p())));
  return est;
}

}  // namespace maller
