#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace fluidprobe;

namespace {

// Closed-form cubic spline written out independently of the library.
double reference_w(double r, double h) {
  const double q = r / h;
  const double s = 8.0 / (std::numbers::pi * h * h * h);
  if (q <= 0.5) return s * (6.0 * q * q * q - 6.0 * q * q + 1.0);
  if (q <= 1.0) return s * 2.0 * std::pow(1.0 - q, 3);
  return 0.0;
}

}  // namespace

TEST_CASE("value at the origin is the normalization constant") {
  CHECK(kernel_value(Vec3::Zero(), 0.1) == doctest::Approx(8.0 / (std::numbers::pi * 1e-3)).epsilon(1e-12));
  CHECK(kernel_value(Vec3::Zero(), 0.1) == doctest::Approx(2546.48).epsilon(1e-6));
}

TEST_CASE("compact support") {
  CHECK(kernel_value(Vec3(0.1, 0.0, 0.0), 0.1) == 0.0);
  CHECK(kernel_value(Vec3(0.0, 0.2, 0.0), 0.1) == 0.0);
  CHECK(kernel_gradient(Vec3(0.0, 0.0, 0.1000001), 0.1).norm() == 0.0);
}

TEST_CASE("matches the piecewise closed form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.12, 0.12);
  for (int k = 0; k < 500; ++k) {
    const Vec3 r(u(rng), u(rng), u(rng));
    CHECK(kernel_value(r, 0.1) == doctest::Approx(reference_w(r.norm(), 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("midpoint quadrature of W integrates to one") {
  const double h = 0.1;
  const int n = 200;
  const double dx = 2.0 * h / n;
  CubicSplineKernel k(h);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const Vec3 p(-h + (i + 0.5) * dx, -h + (j + 0.5) * dx, -h + (l + 0.5) * dx);
        sum += k.value_at(p.norm());
      }
  CHECK(std::abs(sum * dx * dx * dx - 1.0) < 1e-3);
}

TEST_CASE("gradient is zero at the origin and antisymmetric") {
  CHECK(kernel_gradient(Vec3::Zero(), 0.1).norm() == 0.0);
  const Vec3 r(0.02, -0.03, 0.01);
  CHECK((kernel_gradient(r, 0.1) + kernel_gradient(-r, 0.1)).norm() < 1e-12);
  CHECK(kernel_gradient(r, 0.1).dot(r) < 0.0);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const double h = 0.1, eps = 1e-6;
  int tested = 0;
  while (tested < 1000) {
    const Vec3 r(u(rng), u(rng), u(rng));
    const double d = r.norm();
    if (d < 0.005 || d > 0.095 || std::abs(d - 0.05) < 0.002) continue;
    Vec3 fd;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = eps;
      fd[a] = (reference_w((r + e).norm(), h) - reference_w((r - e).norm(), h)) / (2.0 * eps);
    }
    const Vec3 g = kernel_gradient(r, h);
    CHECK((g - fd).norm() <= 1e-4 * fd.norm());
    ++tested;
  }
}

TEST_CASE("non-finite input is rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(kernel_value(Vec3(nan, 0, 0), 0.1), InputError);
  CHECK_THROWS_AS(kernel_gradient(Vec3(0, inf, 0), 0.1), InputError);
  CHECK_THROWS(CubicSplineKernel(0.0));
  CHECK_THROWS(CubicSplineKernel(-1.0));
}
