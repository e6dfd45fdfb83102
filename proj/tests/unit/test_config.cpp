#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/config.hpp"

using namespace fluidprobe;

TEST_CASE("defaults survive a round trip") {
  const RunConfig a;
  const std::string text = config_to_string(a);
  CHECK(config_to_string(parse_config(text)) == text);
  for (const char* section : {"[simulation]", "[scene]", "[nbv]", "[output]"}) CHECK(text.find(section) != std::string::npos);
}

TEST_CASE("non-default values survive a round trip exactly") {
  RunConfig a;
  a.sim.time_step = 0.1 + 0.2;
  a.sim.steps = 123;
  a.sim.gravity = Vec3(0.0, -1.0 / 3.0, 1e-300);
  a.sim.domain = Aabb{Vec3(-1.5, -1.5, -1.5), Vec3(1.5, 1.5, 2.0 / 7.0)};
  a.sim.deterministic = false;
  a.sim.seed = 987654321;
  a.scene_path = "scenes/car.ply";
  a.ics = "+x,-y";
  a.budget = 7;
  a.perturb_sigma = 0.05;
  a.write_vtk = false;
  const RunConfig b = parse_config(config_to_string(a));
  CHECK(b.sim.time_step == a.sim.time_step);
  CHECK(b.sim.steps == 123);
  CHECK(b.sim.gravity == a.sim.gravity);
  REQUIRE(b.sim.domain);
  CHECK(b.sim.domain->max == a.sim.domain->max);
  CHECK_FALSE(b.sim.deterministic);
  CHECK(b.sim.seed == 987654321u);
  CHECK(b.scene_path == "scenes/car.ply");
  CHECK(b.budget == 7);
  CHECK_FALSE(b.write_vtk);
  CHECK(config_to_string(b) == config_to_string(a));
}

TEST_CASE("partial files keep defaults") {
  const RunConfig c = parse_config("[simulation]\nsteps = 5\n[nbv]\nproposer = farthest\n");
  CHECK(c.sim.steps == 5);
  CHECK(c.sim.time_step == 0.002);
  CHECK(c.proposer == "farthest");
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(parse_config("[simulation]\nstep = 5\n"), InputError);
  CHECK_THROWS_AS(parse_config("[solver]\nsteps = 5\n"), InputError);
  CHECK_THROWS_AS(parse_config("[simulation]\nsteps = five\n"), InputError);
  CHECK_THROWS_AS(parse_config("[simulation]\ntime_step = 0.002s\n"), InputError);
  CHECK_THROWS_AS(parse_config("[simulation]\ngravity = 0 -9.81\n"), InputError);
  CHECK_THROWS_AS(parse_config("[simulation]\ntime_step = -1\n"), InputError);
  CHECK_THROWS_AS(parse_config("[output]\nwrite_vtk = maybe\n"), InputError);
}

TEST_CASE("overrides") {
  RunConfig c;
  apply_override(c, "simulation.steps=42");
  apply_override(c, "scene.direction=+z");
  CHECK(c.sim.steps == 42);
  CHECK(c.direction == "+z");
  CHECK_THROWS_AS(apply_override(c, "steps=42"), InputError);
  CHECK_THROWS_AS(apply_override(c, "simulation.nope=1"), InputError);
}

TEST_CASE("list parsing") {
  CHECK(parse_int_list("0, 1,5") == std::vector<int>{0, 1, 5});
  CHECK(parse_double_list("3,4.5") == std::vector<double>{3.0, 4.5});
  CHECK_THROWS_AS(parse_int_list("1,a"), InputError);
}
