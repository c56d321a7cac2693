#include "maller/simd.hpp"

#include <cmath>

namespace maller::simd::detail {

void squared_distances_scalar(const double* pts, std::size_t n, std::size_t p,
                              const double* q, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = pts + i * p;
    double acc = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      const double d = row[k] - q[k];
      acc += d * d;
    }
    out[i] = acc;
  }
}

void vexp_scalar(const double* x, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

}  // namespace maller::simd::detail
