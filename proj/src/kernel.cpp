#include "fluidprobe/kernel.hpp"

namespace fluidprobe {

CubicSplineKernel::CubicSplineKernel(double support_radius)
    : h_(support_radius), inv_h_(0.0), sigma_(0.0) {
  if (!std::isfinite(support_radius) || support_radius <= 0.0)
    throw InputError("kernel support radius must be positive and finite");
  inv_h_ = 1.0 / h_;
  sigma_ = 8.0 / (std::numbers::pi * h_ * h_ * h_);
}

double CubicSplineKernel::value(const Vec3& r) const {
  if (!r.allFinite()) throw InputError("kernel_value: non-finite displacement");
  return value_at(r.norm());
}

Vec3 CubicSplineKernel::gradient(const Vec3& r) const {
  if (!r.allFinite()) throw InputError("kernel_gradient: non-finite displacement");
  return gradient_at(r, r.norm());
}

double kernel_value(const Vec3& r, double support_radius) {
  return CubicSplineKernel(support_radius).value(r);
}

Vec3 kernel_gradient(const Vec3& r, double support_radius) {
  return CubicSplineKernel(support_radius).gradient(r);
}

}  // namespace fluidprobe
