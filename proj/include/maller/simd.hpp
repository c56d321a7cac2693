#pragma once

#include <cstddef>
#include <string>

// Batch primitives for the arithmetic inner loops (squared distances against a
// query point, vectorized exp). Each primitive has a scalar reference
// implementation and an AVX2 variant; the active one is chosen once at startup
// from cpuid and can be overridden with MALLER_SIMD=scalar or force_scalar().
// The two variants are equivalence-tested against each other.

namespace maller::simd {

enum class Isa { scalar, avx2 };

/// Instruction set selected by the dispatcher.
Isa active_isa();

/// Force the scalar reference path (used by the equivalence tests).
void force_scalar(bool on);

std::string isa_name(Isa isa);

/// out[i] = squared Euclidean distance between q and row i of pts
/// (row-major n x p, contiguous).
void squared_distances(const double* pts, std::size_t n, std::size_t p,
                       const double* q, double* out);

/// out[i] = exp(x[i]); inputs are expected in [-746, 0] in this library.
void vexp(const double* x, std::size_t n, double* out);

namespace detail {
void squared_distances_scalar(const double* pts, std::size_t n, std::size_t p,
                              const double* q, double* out);
void vexp_scalar(const double* x, std::size_t n, double* out);
#if defined(MALLER_BUILD_AVX2)
void squared_distances_avx2(const double* pts, std::size_t n, std::size_t p,
                            const double* q, double* out);
void vexp_avx2(const double* x, std::size_t n, double* out);
#endif
}  // namespace detail

}  // namespace maller::simd
