#pragma once

#include <functional>
#include <span>

#include "maller/errors.hpp"

namespace maller {

/// Radial kernel profile, compactly supported on [0,1]. The stock profile is
/// K(u) = exp(-7u^2) on [0,1], used unnormalized inside the regression weights
/// (any scalar factor cancels in the weighted least-squares row). The
/// normalized variant rescales so that the zeroth moment over the unit ball of
/// a given dimension equals one; it exists for moment-based diagnostics only.
class Kernel {
public:
  /// K(u) = exp(-7 u^2) * I[0,1](u).
  static Kernel gauss7();

  /// K(u) = 1 on [0,1] (used by tests as an analytically tractable profile).
  static Kernel indicator();

  /// Arbitrary profile on [0,1]; the caller guarantees nonnegativity.
  static Kernel custom(std::function<double(double)> profile);

  /// Copy of this kernel rescaled so that mu_{1,0} = 1 in dimension d.
  Kernel normalized(int d) const;

  /// Evaluate at u >= 0; throws std::domain_error for negative u.
  double operator()(double u) const;

  bool is_normalized() const { return normalized_; }
  double scale() const { return scale_; }

  /// True for the stock exp(-7u^2) profile (enables the vectorized path).
  bool is_gauss7() const { return gauss7_; }

  /// Batch evaluation from squared distances: out[i] = scale * K(sqrt(d2[i]/h2))
  /// where h2 is the squared support radius. Entries with d2 >= h2 get 0.
  void weights_from_sq_dists(std::span<const double> d2, double h2,
                             std::span<double> out) const;

private:
  Kernel() = default;
  std::function<double(double)> profile_;
  double scale_ = 1.0;
  bool normalized_ = false;
  bool gauss7_ = false;
};

/// Surface measure of the unit (d-1)-sphere, |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2).
double unit_sphere_area(int d);

/// Kernel moment mu_{i,j} = int_{B_1(0) in R^d} K^i(|u|) |u|^j du, computed by
/// radial reduction to an adaptive Gauss-Kronrod quadrature on [0,1]
/// (absolute tolerance 1e-10).
double kernel_moment(const Kernel& kernel, int i, int j, int d);

}  // namespace maller
