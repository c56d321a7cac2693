#if defined(MALLER_BUILD_AVX2)

#include "maller/simd.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2 variants of the batch primitives. The exp kernel follows the classic
// Cephes range-reduction + rational-approximation recipe for double precision
// (error ~1 ulp on the reduced interval); the equivalence suite checks it
// against std::exp.

namespace maller::simd::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

}  // namespace

void squared_distances_avx2(const double* pts, std::size_t n, std::size_t p,
                            const double* q, double* out) {
  if (p == 1) {
    const __m256d qv = _mm256_set1_pd(q[0]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pts + i), qv);
      _mm256_storeu_pd(out + i, _mm256_mul_pd(d, d));
    }
    for (; i < n; ++i) {
      const double d = pts[i] - q[0];
      out[i] = d * d;
    }
    return;
  }
  if (p == 2) {
    // Two rows per 256-bit lane: (x0, y0, x1, y1).
    const __m256d qv = _mm256_setr_pd(q[0], q[1], q[0], q[1]);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
      __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pts + 2 * i), qv);
      d = _mm256_mul_pd(d, d);
      __m256d sw = _mm256_permute_pd(d, 0x5);  // swap within 128-bit halves
      __m256d s = _mm256_add_pd(d, sw);
      out[i] = _mm256_cvtsd_f64(s);
      out[i + 1] = _mm_cvtsd_f64(_mm256_extractf128_pd(s, 1));
    }
    for (; i < n; ++i) {
      const double dx = pts[2 * i] - q[0];
      const double dy = pts[2 * i + 1] - q[1];
      out[i] = dx * dx + dy * dy;
    }
    return;
  }
  // General case: vectorize along the coordinate axis of each row.
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = pts + i * p;
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= p; k += 4) {
      __m256d d = _mm256_sub_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(q + k));
      acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; k < p; ++k) {
      const double d = row[k] - q[k];
      s += d * d;
    }
    out[i] = s;
  }
}

namespace {

const __m256d kLog2E = _mm256_set1_pd(1.4426950408889634074);
const __m256d kC1 = _mm256_set1_pd(6.93145751953125e-1);
const __m256d kC2 = _mm256_set1_pd(1.42860682030941723212e-6);

const __m256d kP0 = _mm256_set1_pd(1.26177193074810590878e-4);
const __m256d kP1 = _mm256_set1_pd(3.02994407707441961300e-2);
const __m256d kP2 = _mm256_set1_pd(9.99999999999999999910e-1);

const __m256d kQ0 = _mm256_set1_pd(3.00198505138664455042e-6);
const __m256d kQ1 = _mm256_set1_pd(2.52448340349684104192e-3);
const __m256d kQ2 = _mm256_set1_pd(2.27265548208155028766e-1);
const __m256d kQ3 = _mm256_set1_pd(2.00000000000000000005e0);

const __m256d kUnderflow = _mm256_set1_pd(-708.396418532264106224);
const __m256d kOverflow = _mm256_set1_pd(709.436139303126791435);
const __m256d kOne = _mm256_set1_pd(1.0);
const __m256d kTwo = _mm256_set1_pd(2.0);

inline __m256d exp_pd(__m256d x0) {
  __m256d underflow = _mm256_cmp_pd(x0, kUnderflow, _CMP_LT_OQ);
  __m256d x = _mm256_min_pd(_mm256_max_pd(x0, kUnderflow), kOverflow);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, kLog2E),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  // r = x - n*ln2, split into high/low parts to keep the reduction exact.
  __m256d r = _mm256_fnmadd_pd(n, kC1, x);
  r = _mm256_fnmadd_pd(n, kC2, r);

  __m256d r2 = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(kP0, r2, kP1);
  px = _mm256_fmadd_pd(px, r2, kP2);
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(kQ0, r2, kQ1);
  qx = _mm256_fmadd_pd(qx, r2, kQ2);
  qx = _mm256_fmadd_pd(qx, r2, kQ3);
  __m256d e = _mm256_div_pd(_mm256_mul_pd(kTwo, px), _mm256_sub_pd(qx, px));
  e = _mm256_add_pd(e, kOne);

  // Scale by 2^n through the exponent bits.
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(n64));

  return _mm256_andnot_pd(underflow, e);
}

}  // namespace

void vexp_avx2(const double* x, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

}  // namespace maller::simd::detail

#endif  // MALLER_BUILD_AVX2
