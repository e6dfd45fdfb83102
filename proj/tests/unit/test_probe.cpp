#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/probe.hpp"
#include "fluidprobe/synthetic.hpp"

using namespace fluidprobe;

namespace {

SimulationConfig short_run(long steps) {
  SimulationConfig cfg;
  cfg.steps = steps;
  return cfg;
}

GaussianScene small_block() { return make_block_scene(Vec3(0, 0.1, 0), Vec3::Constant(0.1), 0.1, 0.04, 0.95); }

}  // namespace

TEST_CASE("empty initial condition list is rejected") {
  CHECK_THROWS_AS(probe_scene(small_block(), short_run(5), std::vector<FlowDirection>{}), InputError);
}

TEST_CASE("single initial condition probe is that condition's aggregate") {
  const std::vector<FlowDirection> one{FlowDirection::kNegX};
  const ProbeResult r = probe_scene(small_block(), short_run(40), one);
  REQUIRE(r.runs.size() == 1);
  CHECK(r.divergence == r.runs[0].aggregate.mean_divergence);
  CHECK(r.ic_divergence(FlowDirection::kNegX) != nullptr);
  CHECK(r.ic_divergence(FlowDirection::kPosX) == nullptr);
  CHECK(r.rigid_particles > 0);
}

TEST_CASE("maximum over initial conditions dominates every condition") {
  const std::vector<FlowDirection> two{FlowDirection::kPosX, FlowDirection::kNegZ};
  const GaussianScene scene = small_block();
  const ProbeResult r = probe_scene(scene, short_run(40), two);
  REQUIRE(r.runs.size() == 2);
  CHECK(r.divergence.size() == scene.size());
  for (std::size_t g = 0; g < scene.size(); ++g)
    for (const IcRun& run : r.runs) CHECK(r.divergence[g] >= run.aggregate.mean_divergence[g]);
  CHECK(r.geometry_divergence == doctest::Approx(geometry_divergence(scene, r.divergence)));
}

TEST_CASE("function-critical view ranking") {
  const GaussianScene scene = make_block_scene(Vec3(0, 0.15, 0), Vec3::Constant(0.15), 0.075, 0.03, 1.0);
  // Front camera on +x, rear camera on -x.
  std::vector<CameraView> poses{look_at(Vec3(2, 0.15, 0), Vec3(0, 0.15, 0), Vec3::UnitY(), 600, 400, 400, "front"),
                                look_at(Vec3(-2, 0.15, 0), Vec3(0, 0.15, 0), Vec3::UnitY(), 600, 400, 400, "rear")};
  const SimulationConfig cfg = short_run(60);
  CHECK(function_critical_views(scene, cfg, FlowDirection::kNegX, poses, 0).empty());
  const auto ranked = function_critical_views(scene, cfg, FlowDirection::kNegX, poses, 2);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].id == "front");
  CHECK(ranked[0].count_score > ranked[1].count_score);
  CHECK_THROWS_AS(function_critical_views(scene, cfg, FlowDirection::kNegX, poses, 3), InputError);
}
