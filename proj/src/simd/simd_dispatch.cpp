#include "maller/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace maller::simd {

namespace {

bool avx2_supported() {
#if defined(MALLER_BUILD_AVX2) && defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool env_forces_scalar() {
  const char* v = std::getenv("MALLER_SIMD");
  return v != nullptr && std::strcmp(v, "scalar") == 0;
}

std::atomic<bool> g_force_scalar{env_forces_scalar()};
const bool g_have_avx2 = avx2_supported();

}  // namespace

Isa active_isa() {
  if (g_force_scalar.load(std::memory_order_relaxed) || !g_have_avx2)
    return Isa::scalar;
  return Isa::avx2;
}

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

std::string isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void squared_distances(const double* pts, std::size_t n, std::size_t p,
                       const double* q, double* out) {
#if defined(MALLER_BUILD_AVX2)
  if (active_isa() == Isa::avx2) {
    detail::squared_distances_avx2(pts, n, p, q, out);
    return;
  }
#endif
  detail::squared_distances_scalar(pts, n, p, q, out);
}

void vexp(const double* x, std::size_t n, double* out) {
#if defined(MALLER_BUILD_AVX2)
  if (active_isa() == Isa::avx2) {
    detail::vexp_avx2(x, n, out);
    return;
  }
#endif
  detail::vexp_scalar(x, n, out);
}

}  // namespace maller::simd
