#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace fluidprobe {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned box in world units (meters).
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  static Aabb empty() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {Vec3::Constant(inf), Vec3::Constant(-inf)};
  }

  bool is_empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return is_empty() ? Vec3::Zero() : Vec3(max - min); }
  Vec3 center() const { return 0.5 * (min + max); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& other) {
    if (other.is_empty()) return;
    min = min.cwiseMin(other.min);
    max = max.cwiseMax(other.max);
  }
  Aabb padded(const Vec3& pad) const { return {min - pad, max + pad}; }

  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  bool contains(const Aabb& other, double tol = 0.0) const {
    return contains(other.min, tol) && contains(other.max, tol);
  }
};

/// Malformed input: bad file, invalid parameter, out-of-range index.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite solver state. Carries the step at which it was detected.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace fluidprobe
