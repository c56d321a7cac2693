#include "maller/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <vector>

#include "maller/simd.hpp"

namespace maller {

Kernel Kernel::gauss7() {
  Kernel k;
  k.profile_ = [](double u) { return std::exp(-7.0 * u * u); };
  k.gauss7_ = true;
  return k;
}

Kernel Kernel::indicator() {
  Kernel k;
  k.profile_ = [](double) { return 1.0; };
  return k;
}

Kernel Kernel::custom(std::function<double(double)> profile) {
  Kernel k;
  k.profile_ = std::move(profile);
  return k;
}

Kernel Kernel::normalized(int d) const {
  Kernel k = *this;
  k.scale_ = 1.0;
  k.normalized_ = false;
  const double m10 = kernel_moment(k, 1, 0, d);
  k.scale_ = scale_ / m10;
  k.normalized_ = true;
  return k;
}

double Kernel::operator()(double u) const {
  if (u < 0.0) throw std::domain_error("kernel argument must be nonnegative");
  if (u > 1.0) return 0.0;
  return scale_ * profile_(u);
}

void Kernel::weights_from_sq_dists(std::span<const double> d2, double h2,
                                   std::span<double> out) const {
  const std::size_t n = d2.size();
  if (gauss7_) {
    // w = scale * exp(-7 d2 / h2), zero outside the support.
    std::vector<double> args(n);
    const double c = -7.0 / h2;
    for (std::size_t i = 0; i < n; ++i)
      args[i] = d2[i] <= h2 ? c * d2[i] : -750.0;
    simd::vexp(args.data(), n, out.data());
    if (scale_ != 1.0)
      for (std::size_t i = 0; i < n; ++i) out[i] *= scale_;
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u2 = d2[i] / h2;
    out[i] = u2 <= 1.0 ? scale_ * profile_(std::sqrt(u2)) : 0.0;
  }
}

double unit_sphere_area(int d) {
  if (d < 1) throw std::domain_error("dimension must be positive");
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

double kernel_moment(const Kernel& kernel, int i, int j, int d) {
  if (d < 1) throw std::domain_error("dimension must be positive");
  if (i < 1) throw std::domain_error("kernel power must be positive");
  if (j < 0) throw std::domain_error("moment order must be nonnegative");
  const auto radial = [&](double t) {
    return std::pow(kernel(t), i) * std::pow(t, j + d - 1);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double integral =
      gauss_kronrod<double, 15>::integrate(radial, 0.0, 1.0, 12, 1e-10);
  return unit_sphere_area(d) * integral;
}

}  // namespace maller
