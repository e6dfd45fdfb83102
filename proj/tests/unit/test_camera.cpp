#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/camera.hpp"
#include "fluidprobe/synthetic.hpp"

#include <cmath>
#include <numbers>

using namespace fluidprobe;

namespace {

CameraView identity_view(double f, int w, int h) {
  CameraView v;
  v.focal = f;
  v.width = w;
  v.height = h;
  v.id = "cam";
  return v;
}

Gaussian ball(const Vec3& c, double r, double opacity = 0.9) {
  Gaussian g;
  g.center = c;
  g.scale = Vec3::Constant(r);
  g.opacity = opacity;
  return g;
}

// Focal length that gives an isotropic Gaussian of radius r at depth z the
// requested screen radius.
double focal_for(double radius_px, double r, double z) { return radius_px * z / (3.0 * r); }

}  // namespace

TEST_CASE("projection on the optical axis") {
  const CameraView v = identity_view(800, 800, 600);
  const auto p = project(v, Vec3(0, 0, 4));
  REQUIRE(p);
  CHECK(p->pixel.x() == doctest::Approx(400));
  CHECK(p->pixel.y() == doctest::Approx(300));
  CHECK(p->depth == doctest::Approx(4));
  CHECK_FALSE(project(v, Vec3(0, 0, -1)));
  CHECK_FALSE(project(v, Vec3(1, 0, 0)));
}

TEST_CASE("pinhole arithmetic") {
  const CameraView v = identity_view(800, 1600, 800);
  const auto p = project(v, Vec3(0.5, 0, 1));
  REQUIRE(p);
  CHECK(p->pixel.x() == doctest::Approx(1200));
}

TEST_CASE("screen radius scales with depth and clamps") {
  const CameraView v = identity_view(800, 800, 800);
  const Gaussian g = ball(Vec3(0, 0, 4), 0.1);
  CHECK(screen_radius(v, g) == doctest::Approx(60));
  CHECK(screen_radius(v, ball(Vec3(0, 0, 8), 0.1)) == doctest::Approx(30));
  CHECK(screen_radius(v, ball(Vec3(0, 0, 1e-4), 0.1)) == doctest::Approx(v.diagonal()));
}

TEST_CASE("visibility basics") {
  const CameraView v = identity_view(800, 800, 800);
  GaussianScene s;
  s.gaussians.push_back(ball(Vec3(0, 0, 3), 0.1));
  s.gaussians.push_back(ball(Vec3(0, 0, -3), 0.1));
  s.gaussians.push_back(ball(Vec3(50, 0, 3), 0.1));
  CHECK(visible_set(v, s) == std::vector<int>{0});
}

TEST_CASE("opaque near Gaussian hides a far one behind it") {
  const CameraView v = identity_view(800, 800, 800);
  GaussianScene s;
  s.gaussians.push_back(ball(Vec3(0, 0, 6), 0.05, 0.9));
  s.gaussians.push_back(ball(Vec3(0, 0, 2), 0.3, 1.0));
  CHECK(visible_set(v, s) == std::vector<int>{1});
  // A translucent occluder lets it through.
  s.gaussians[1].opacity = 0.5;
  CHECK(visible_set(v, s) == std::vector<int>{0, 1});
}

TEST_CASE("single Gaussian view score") {
  const double r = 0.1, z = 3.0;
  const CameraView v = identity_view(focal_for(10.0, r, z), 100, 100);
  GaussianScene s;
  s.gaussians.push_back(ball(Vec3(0, 0, z), r));
  const std::vector<double> d{2.0};
  CHECK(view_divergence_score(v, s, d) == doctest::Approx(std::numbers::pi * 100.0 / 1e4 * 2.0));
  CHECK(view_divergence_score(v, s, d) == doctest::Approx(0.06283).epsilon(1e-4));
  ScoreOptions plain;
  plain.unweighted = true;
  CHECK(view_divergence_score(v, s, d, plain) == doctest::Approx(2.0));
}

TEST_CASE("large disc saturates the weight") {
  const CameraView v = identity_view(focal_for(200.0, 0.1, 3.0), 100, 100);
  GaussianScene s;
  s.gaussians.push_back(ball(Vec3(0, 0, 3), 0.1));
  const std::vector<double> d{2.0};
  CHECK(view_divergence_score(v, s, d) == doctest::Approx(2.0));
}

TEST_CASE("count score") {
  const double radius = std::sqrt(0.05 * 1e4 / std::numbers::pi);
  const CameraView v = identity_view(focal_for(radius, 0.1, 3.0), 100, 100);
  GaussianScene s;
  s.gaussians.push_back(ball(Vec3(0, 0, 3), 0.1));
  const std::vector<double> c{100.0};
  CHECK(view_count_score(v, s, c) == doctest::Approx(5.0));

  GaussianScene many;
  for (int k = 0; k < 4; ++k) many.gaussians.push_back(ball(Vec3(-0.6 + 0.4 * k, 0, 3 + k), 0.05));
  const CameraView w = identity_view(400, 400, 400);
  const ViewScore vs = score_view(w, many, std::vector<double>(4, 1.0), std::vector<double>(4, 7.0));
  double sum_w = 0.0;
  for (double x : vs.weights) sum_w += x;
  CHECK(vs.count == doctest::Approx(7.0 * sum_w));
}

TEST_CASE("nothing visible scores zero") {
  const CameraView v = identity_view(800, 800, 800);
  GaussianScene s;
  s.gaussians.push_back(ball(Vec3(0, 0, -3), 0.1));
  const std::vector<double> d{5.0};
  CHECK(view_divergence_score(v, s, d) == 0.0);
  CHECK(view_count_score(v, s, d) == 0.0);
  CHECK(score_view(v, s, d, {}).normalized_divergence() == 0.0);
}

TEST_CASE("look_at points the optical axis at the target") {
  const CameraView v = look_at(Vec3(3, 1, 0), Vec3::Zero(), Vec3::UnitY(), 500, 640, 480);
  const auto p = project(v, Vec3::Zero());
  REQUIRE(p);
  CHECK(p->pixel.x() == doctest::Approx(320));
  CHECK(p->pixel.y() == doctest::Approx(240));
  // A point above the target appears higher in the image (smaller y).
  CHECK(project(v, Vec3(0, 0.2, 0))->pixel.y() < 240);
}

TEST_CASE("NeRF pose convention") {
  const char* doc = R"({"camera_angle_x": 1.5707963267948966, "w": 200, "h": 100,
    "frames": [{"file_path": "./r_0", "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,5],[0,0,0,1]]}]})";
  const auto views = parse_poses_json(doc);
  REQUIRE(views.size() == 1);
  CHECK(views[0].id == "./r_0");
  CHECK(views[0].focal == doctest::Approx(100.0));
  CHECK((views[0].center() - Vec3(0, 0, 5)).norm() < 1e-12);
  CHECK((views[0].forward() - Vec3(0, 0, -1)).norm() < 1e-12);
  CHECK_THROWS_AS(parse_poses_json(R"({"frames": []})"), InputError);
}

TEST_CASE("pose file round trip") {
  const auto views = orbit_poses(6, 2.0, 0.5, Vec3::Zero(), 700, 320, 240);
  const auto text_path = std::filesystem::temp_directory_path() / "fluidprobe_poses_test.json";
  save_poses(views, text_path);
  const auto back = load_poses(text_path);
  REQUIRE(back.size() == views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    CHECK((back[i].rotation - views[i].rotation).norm() < 1e-9);
    CHECK((back[i].translation - views[i].translation).norm() < 1e-9);
    CHECK(back[i].focal == doctest::Approx(views[i].focal));
    CHECK(back[i].width == 320);
    CHECK(back[i].id == views[i].id);
  }
  std::filesystem::remove(text_path);
}
