#include "fluidprobe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace fluidprobe {

GaussianScene make_block_scene(const Vec3& center, const Vec3& half_size, double gaussian_spacing, double scale,
                               double opacity) {
  if (!(gaussian_spacing > 0.0) || !(scale > 0.0)) throw InputError("block scene: spacing and scale must be positive");
  GaussianScene scene;
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::floor(2.0 * half_size[a] / gaussian_spacing + 1e-9)) + 1);
  for (int z = 0; z < n[2]; ++z)
    for (int y = 0; y < n[1]; ++y)
      for (int x = 0; x < n[0]; ++x) {
        Gaussian g;
        const Vec3 idx(x, y, z);
        for (int a = 0; a < 3; ++a)
          g.center[a] = n[a] == 1 ? center[a] : center[a] - half_size[a] + idx[a] * (2.0 * half_size[a] / (n[a] - 1));
        g.scale = Vec3::Constant(scale);
        g.opacity = opacity;
        scene.gaussians.push_back(g);
      }
  return scene;
}

GaussianScene make_box_shell_scene(const Vec3& center, const Vec3& half_size, double spacing, double tangent,
                                   double normal, double opacity) {
  if (!(spacing > 0.0) || !(tangent > 0.0) || !(normal > 0.0))
    throw InputError("shell scene: spacing and scales must be positive");
  GaussianScene scene;
  for (int axis = 0; axis < 3; ++axis)
    for (int side = -1; side <= 1; side += 2) {
      Vec3 n = Vec3::Zero();
      n[axis] = side;
      const int u = (axis + 1) % 3, v = (axis + 2) % 3;
      const int nu = std::max(1, static_cast<int>(std::floor(2.0 * half_size[u] / spacing + 1e-9)) + 1);
      const int nv = std::max(1, static_cast<int>(std::floor(2.0 * half_size[v] / spacing + 1e-9)) + 1);
      for (int a = 0; a < nu; ++a)
        for (int b = 0; b < nv; ++b) {
          Gaussian g;
          g.center = center + half_size[axis] * n;
          g.center[u] += nu == 1 ? 0.0 : -half_size[u] + a * (2.0 * half_size[u] / (nu - 1));
          g.center[v] += nv == 1 ? 0.0 : -half_size[v] + b * (2.0 * half_size[v] / (nv - 1));
          g.scale = Vec3(tangent, tangent, normal);
          g.rotation = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), n);
          g.opacity = opacity;
          scene.gaussians.push_back(g);
        }
    }
  return scene;
}

std::vector<CameraView> orbit_poses(int count, double radius, double height, const Vec3& target, double focal,
                                    int width, int height_px) {
  std::vector<CameraView> views;
  for (int i = 0; i < count; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / count;
    const Vec3 eye = target + Vec3(radius * std::cos(phi), height, -radius * std::sin(phi));
    views.push_back(look_at(eye, target, Vec3::UnitY(), focal, width, height_px, "view_" + std::to_string(i)));
  }
  return views;
}

GaussianScene jitter_scene(const GaussianScene& scene, double fraction, double sigma, std::uint64_t seed) {
  GaussianScene out = scene;
  std::mt19937_64 rng(seed);
  std::vector<int> order(scene.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(scene.size())));
  std::normal_distribution<double> normal(0.0, sigma);
  for (std::size_t k = 0; k < m && k < order.size(); ++k)
    out.gaussians[order[k]].center += Vec3(normal(rng), normal(rng), normal(rng));
  return out;
}

}  // namespace fluidprobe
