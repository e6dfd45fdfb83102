#pragma once

#include "fluidprobe/camera.hpp"
#include "fluidprobe/scene.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace fluidprobe {

/// Solid box filled with isotropic Gaussians on a regular grid.
GaussianScene make_block_scene(const Vec3& center, const Vec3& half_size, double gaussian_spacing, double scale,
                               double opacity = 0.9);

/// Hollow box covered by flat surface splats, as a trained 3DGS model of a
/// box would look: tangent scale `tangent`, normal scale `normal`, one splat
/// per `spacing` on each face with its short axis along the face normal.
GaussianScene make_box_shell_scene(const Vec3& center, const Vec3& half_size, double spacing, double tangent,
                                   double normal, double opacity = 0.9);

/// Ring of cameras around `target` at the given radius and height offset,
/// starting on the +x axis and advancing counter-clockwise seen from +y.
std::vector<CameraView> orbit_poses(int count, double radius, double height, const Vec3& target, double focal,
                                    int width, int height_px);

/// Copy of `scene` with the centers of a random `fraction` of Gaussians moved
/// by isotropic normal noise of std `sigma`.
GaussianScene jitter_scene(const GaussianScene& scene, double fraction, double sigma, std::uint64_t seed);

}  // namespace fluidprobe
