#include "fluidprobe/camera.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fluidprobe {

void CameraView::validate() const {
  if (!rotation.allFinite() || (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw InputError("camera '" + id + "': rotation is not orthonormal");
  if (!translation.allFinite()) throw InputError("camera '" + id + "': translation is not finite");
  if (!(focal > 0.0) || !std::isfinite(focal)) throw InputError("camera '" + id + "': focal length must be positive");
  if (width <= 0 || height <= 0) throw InputError("camera '" + id + "': image size must be positive");
}

CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width, int height,
                   std::string id) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ());
  x.normalize();
  const Vec3 y = z.cross(x);
  CameraView view;
  view.rotation.row(0) = x.transpose();
  view.rotation.row(1) = y.transpose();
  view.rotation.row(2) = z.transpose();
  view.translation = -view.rotation * eye;
  view.focal = focal;
  view.width = width;
  view.height = height;
  view.id = std::move(id);
  return view;
}

std::optional<Projection> project(const CameraView& view, const Vec3& point) {
  const Vec3 c = view.to_camera(point);
  if (!(c.z() > 0.0)) return std::nullopt;
  Projection p;
  p.pixel = Eigen::Vector2d(view.focal * c.x() / c.z() + 0.5 * view.width, view.focal * c.y() / c.z() + 0.5 * view.height);
  p.depth = c.z();
  return p;
}

double screen_radius(const CameraView& view, const Gaussian& g, double n_sigma) {
  const double z = view.to_camera(g.center).z();
  const double r = view.focal * n_sigma * g.radius() / z;
  return std::min(r, view.diagonal());
}

double area_weight(double radius_px, int width, int height) {
  const double w = std::numbers::pi * radius_px * radius_px / (static_cast<double>(width) * static_cast<double>(height));
  return std::clamp(w, 0.0, 1.0);
}

namespace {

double distance_to_rect(const Eigen::Vector2d& p, double x0, double y0, double x1, double y1) {
  const double dx = std::max({x0 - p.x(), 0.0, p.x() - x1});
  const double dy = std::max({y0 - p.y(), 0.0, p.y() - y1});
  return std::hypot(dx, dy);
}

struct Splat {
  int index;
  double depth;
  Eigen::Vector2d pixel;
  double radius;
};

}  // namespace

std::vector<int> visible_set(const CameraView& view, const GaussianScene& scene, const VisibilityOptions& options) {
  const double width = view.width;
  const double height = view.height;
  std::vector<Splat> splats;
  for (std::size_t g = 0; g < scene.size(); ++g) {
    const auto proj = project(view, scene.gaussians[g].center);
    if (!proj) continue;
    const double r = screen_radius(view, scene.gaussians[g], options.n_sigma);
    if (distance_to_rect(proj->pixel, 0.0, 0.0, width, height) > r) continue;
    splats.push_back({static_cast<int>(g), proj->depth, proj->pixel, r});
  }
  std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });

  const int ds = std::max(1, options.downsample);
  const int cw = (view.width + ds - 1) / ds;
  const int ch = (view.height + ds - 1) / ds;
  std::vector<double> acc(static_cast<std::size_t>(cw) * ch, 0.0);
  std::vector<std::size_t> cells;
  std::vector<int> visible;
  for (const Splat& s : splats) {
    cells.clear();
    const int x0 = std::clamp(static_cast<int>(std::floor((s.pixel.x() - s.radius) / ds)), 0, cw - 1);
    const int x1 = std::clamp(static_cast<int>(std::floor((s.pixel.x() + s.radius) / ds)), 0, cw - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor((s.pixel.y() - s.radius) / ds)), 0, ch - 1);
    const int y1 = std::clamp(static_cast<int>(std::floor((s.pixel.y() + s.radius) / ds)), 0, ch - 1);
    for (int cy = y0; cy <= y1; ++cy)
      for (int cx = x0; cx <= x1; ++cx) {
        const double rx0 = cx * ds, ry0 = cy * ds;
        const double rx1 = std::min(rx0 + ds, width), ry1 = std::min(ry0 + ds, height);
        if (distance_to_rect(s.pixel, rx0, ry0, rx1, ry1) <= s.radius)
          cells.push_back(static_cast<std::size_t>(cy) * cw + cx);
      }
    if (cells.empty()) cells.push_back(static_cast<std::size_t>(y0) * cw + x0);
    const bool seen = std::any_of(cells.begin(), cells.end(), [&](std::size_t c) { return acc[c] < options.saturation; });
    if (seen) visible.push_back(s.index);
    const double alpha = scene.gaussians[s.index].opacity;
    for (std::size_t c : cells) acc[c] += (1.0 - acc[c]) * alpha;
  }
  std::sort(visible.begin(), visible.end());
  return visible;
}

ViewScore score_view(const CameraView& view, const GaussianScene& scene, std::span<const double> divergence,
                     std::span<const double> counts, const ScoreOptions& options) {
  if (!divergence.empty() && divergence.size() != scene.size())
    throw InputError("score_view: divergence array does not match scene size");
  if (!counts.empty() && counts.size() != scene.size())
    throw InputError("score_view: count array does not match scene size");
  ViewScore out;
  out.visible = visible_set(view, scene, options.visibility);
  out.radii.reserve(out.visible.size());
  out.weights.reserve(out.visible.size());
  for (int g : out.visible) {
    const double r = screen_radius(view, scene.gaussians[g], options.visibility.n_sigma);
    const double w = options.unweighted ? 1.0 : area_weight(r, view.width, view.height);
    out.radii.push_back(r);
    out.weights.push_back(w);
    if (!divergence.empty()) out.divergence += w * divergence[g];
    if (!counts.empty()) out.count += w * counts[g];
  }
  return out;
}

double view_divergence_score(const CameraView& view, const GaussianScene& scene, std::span<const double> divergence,
                             const ScoreOptions& options) {
  return score_view(view, scene, divergence, {}, options).divergence;
}

double view_count_score(const CameraView& view, const GaussianScene& scene, std::span<const double> counts,
                        const ScoreOptions& options) {
  return score_view(view, scene, {}, counts, options).count;
}

// --- pose files ----------------------------------------------------------------

namespace {
// OpenGL camera axes (y up, z backward) to the +z-forward, y-down convention.
const Eigen::Matrix3d kFlipYZ = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
}

std::vector<CameraView> parse_poses_json(std::string_view text, int default_width, int default_height) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("pose JSON does not parse: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("camera_angle_x") || !doc["camera_angle_x"].is_number())
    throw InputError("pose JSON: missing numeric camera_angle_x");
  if (!doc.contains("frames") || !doc["frames"].is_array()) throw InputError("pose JSON: missing frames array");
  const int width = doc.value("w", default_width);
  const int height = doc.value("h", default_height);
  const double angle = doc["camera_angle_x"].get<double>();
  if (!(angle > 0.0 && angle < std::numbers::pi)) throw InputError("pose JSON: camera_angle_x out of range");
  const double focal = 0.5 * width / std::tan(0.5 * angle);

  std::vector<CameraView> views;
  const auto& frames = doc["frames"];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& fr = frames[i];
    const std::string where = "pose frame " + std::to_string(i);
    if (!fr.contains("transform_matrix") || !fr["transform_matrix"].is_array() || fr["transform_matrix"].size() < 3)
      throw InputError(where + ": missing 4x4 transform_matrix");
    Eigen::Matrix3d rc2w;
    Vec3 pos;
    for (int r = 0; r < 3; ++r) {
      const auto& row = fr["transform_matrix"][r];
      if (!row.is_array() || row.size() != 4) throw InputError(where + ": transform_matrix rows must have 4 entries");
      for (int c = 0; c < 3; ++c) rc2w(r, c) = row[c].get<double>();
      pos[r] = row[3].get<double>();
    }
    CameraView v;
    v.rotation = (rc2w * kFlipYZ).transpose();
    v.translation = -v.rotation * pos;
    v.focal = focal;
    v.width = width;
    v.height = height;
    v.id = fr.contains("file_path") && fr["file_path"].is_string() ? fr["file_path"].get<std::string>()
                                                                    : std::to_string(i);
    v.validate();
    views.push_back(std::move(v));
  }
  return views;
}

std::vector<CameraView> load_poses(const std::filesystem::path& path, int default_width, int default_height) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open pose file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_poses_json(buf.str(), default_width, default_height);
}

void save_poses(const std::vector<CameraView>& views, const std::filesystem::path& path) {
  using nlohmann::json;
  if (views.empty()) throw InputError("save_poses: no views");
  json doc;
  const CameraView& first = views.front();
  doc["camera_angle_x"] = 2.0 * std::atan(0.5 * first.width / first.focal);
  doc["w"] = first.width;
  doc["h"] = first.height;
  doc["frames"] = json::array();
  for (const CameraView& v : views) {
    const Eigen::Matrix3d rc2w = v.rotation.transpose() * kFlipYZ;
    const Vec3 pos = v.center();
    json m = json::array();
    for (int r = 0; r < 3; ++r) m.push_back({rc2w(r, 0), rc2w(r, 1), rc2w(r, 2), pos[r]});
    m.push_back({0.0, 0.0, 0.0, 1.0});
    doc["frames"].push_back({{"file_path", v.id}, {"transform_matrix", m}});
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write pose file " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace fluidprobe
