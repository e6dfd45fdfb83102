#pragma once

#include "fluidprobe/types.hpp"

#include <cmath>
#include <numbers>

namespace fluidprobe {

/// 3D cubic B-spline with compact support equal to `support_radius`.
///
///   q = |r| / h,  sigma = 8 / (pi h^3)
///   W = sigma * (6 (q^3 - q^2) + 1)   for q in [0, 1/2]
///   W = sigma * 2 (1 - q)^3           for q in (1/2, 1]
///   W = 0                             otherwise
///
/// The checked entry points reject non-finite arguments. The `*_at` variants
/// skip validation and are meant for solver inner loops where the distance
/// has already been computed.
class CubicSplineKernel {
 public:
  explicit CubicSplineKernel(double support_radius);

  double support_radius() const { return h_; }
  double normalization() const { return sigma_; }

  double value(const Vec3& r) const;
  Vec3 gradient(const Vec3& r) const;

  double value_at(double dist) const {
    const double q = dist * inv_h_;
    if (q > 1.0) return 0.0;
    if (q <= 0.5) return sigma_ * (6.0 * (q * q * q - q * q) + 1.0);
    const double a = 1.0 - q;
    return sigma_ * 2.0 * a * a * a;
  }

  Vec3 gradient_at(const Vec3& r, double dist) const {
    const double q = dist * inv_h_;
    if (q > 1.0 || dist <= 1.0e-9 * h_) return Vec3::Zero();
    double dwdq;
    if (q <= 0.5) {
      dwdq = 6.0 * sigma_ * q * (3.0 * q - 2.0);
    } else {
      const double a = 1.0 - q;
      dwdq = -6.0 * sigma_ * a * a;
    }
    return (dwdq * inv_h_ / dist) * r;
  }

 private:
  double h_;
  double inv_h_;
  double sigma_;
};

double kernel_value(const Vec3& r, double support_radius);
Vec3 kernel_gradient(const Vec3& r, double support_radius);

}  // namespace fluidprobe
