#pragma once

#include "fluidprobe/scene.hpp"
#include "fluidprobe/types.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fluidprobe {

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates;
/// the camera looks down +z with +y pointing down the image.
struct CameraView {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
  double focal = 800.0;  // pixels
  int width = 800;
  int height = 800;
  std::string id;

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 forward() const { return rotation.row(2).transpose(); }
  double diagonal() const { return std::hypot(static_cast<double>(width), static_cast<double>(height)); }
  void validate() const;
};

/// Camera at `eye` looking at `target`; `up` is the world up hint.
CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width, int height,
                   std::string id = {});

struct Projection {
  Eigen::Vector2d pixel;
  double depth;
};

/// std::nullopt when the point is at or behind the camera plane.
std::optional<Projection> project(const CameraView& view, const Vec3& point);

/// f * n_sigma * r_g / z, clamped to the image diagonal. Caller guarantees z > 0.
double screen_radius(const CameraView& view, const Gaussian& g, double n_sigma = 3.0);

struct VisibilityOptions {
  double n_sigma = 3.0;
  int downsample = 8;
  double saturation = 0.99;
};

/// Gaussians that survive depth, frustum and coarse occlusion tests, in
/// ascending index order.
std::vector<int> visible_set(const CameraView& view, const GaussianScene& scene, const VisibilityOptions& options = {});

struct ViewScore {
  std::vector<int> visible;
  std::vector<double> radii;    // R_g(T), pixels, parallel to `visible`
  std::vector<double> weights;  // w_g(T) in [0, 1]
  double divergence = 0.0;      // S(T)
  double count = 0.0;           // C(T)

  double normalized_divergence() const { return visible.empty() ? 0.0 : divergence / static_cast<double>(visible.size()); }
};

struct ScoreOptions {
  VisibilityOptions visibility;
  bool unweighted = false;
};

/// Full view evaluation; counts may be empty, in which case C(T) = 0.
ViewScore score_view(const CameraView& view, const GaussianScene& scene, std::span<const double> divergence,
                     std::span<const double> counts, const ScoreOptions& options = {});

/// S(T) = sum_{g in G_T} w_g D_g, w_g = clamp(pi R_g^2 / (H W), 0, 1).
double view_divergence_score(const CameraView& view, const GaussianScene& scene, std::span<const double> divergence,
                             const ScoreOptions& options = {});
/// C(T) = sum_{g in G_T} w_g |P_g|.
double view_count_score(const CameraView& view, const GaussianScene& scene, std::span<const double> counts,
                        const ScoreOptions& options = {});

/// Area weight of a single screen-space disc.
double area_weight(double radius_px, int width, int height);

// --- pose files ----------------------------------------------------------------

/// NeRF transforms layout: camera_angle_x plus frames[].transform_matrix
/// (camera-to-world, OpenGL axes). Image size comes from "w"/"h" when present.
std::vector<CameraView> load_poses(const std::filesystem::path& path, int default_width = 800, int default_height = 800);
std::vector<CameraView> parse_poses_json(std::string_view text, int default_width = 800, int default_height = 800);
void save_poses(const std::vector<CameraView>& views, const std::filesystem::path& path);

}  // namespace fluidprobe
