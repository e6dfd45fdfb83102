#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/sph.hpp"

#include <cstring>
#include <limits>

using namespace fluidprobe;

namespace {

ParticleSystem lattice(const SimulationConfig& cfg, int nx, int ny, int nz, const Vec3& origin, const Aabb& domain) {
  ParticleSystem sys;
  sys.resize(static_cast<std::size_t>(nx) * ny * nz);
  sys.fluid_count = sys.size();
  sys.rest_density = cfg.fluid_density;
  sys.fluid_mass = cfg.fluid_particle_mass();
  sys.viscosity = cfg.viscosity;
  sys.gravity = cfg.gravity;
  sys.domain = domain;
  const double d = cfg.particle_diameter();
  std::size_t i = 0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x, ++i) {
        sys.positions[i] = origin + d * Vec3(x, y, z);
        sys.volumes[i] = cfg.fluid_particle_volume();
        sys.densities[i] = cfg.fluid_density;
      }
  return sys;
}

}  // namespace

TEST_CASE("isolated particle falls freely") {
  SimulationConfig cfg;
  ParticleSystem sys = lattice(cfg, 1, 1, 1, Vec3(0.5, 0.5, 0.5), Aabb{Vec3::Zero(), Vec3::Ones()});
  NeighborGrid grid(sys.positions, cfg.cutoff_radius, sys.domain);
  dfsph_step(sys, grid, cfg);
  CHECK(sys.velocities[0].y() == doctest::Approx(-9.81 * cfg.time_step).epsilon(1e-12));
  CHECK(sys.velocities[0].x() == 0.0);
  CHECK(sys.positions[0].y() == doctest::Approx(0.5 - 9.81 * cfg.time_step * cfg.time_step).epsilon(1e-12));
}

TEST_CASE("fluid at rest on a lattice stays at rest without gravity") {
  SimulationConfig cfg;
  cfg.gravity = Vec3::Zero();
  ParticleSystem sys = lattice(cfg, 10, 10, 10, Vec3::Constant(0.3), Aabb{Vec3::Zero(), Vec3::Constant(1.2)});
  NeighborGrid grid(sys.positions, cfg.cutoff_radius, sys.domain);
  DfsphSolver solver(cfg);
  for (long s = 0; s < 10; ++s) solver.step(sys, grid, s);
  double vmax = 0.0;
  for (const Vec3& v : sys.velocities) vmax = std::max(vmax, v.norm());
  CHECK(vmax < 1e-8);
}

TEST_CASE("falling block in a box keeps mass and stays incompressible") {
  SimulationConfig cfg;
  cfg.steps = 60;
  ParticleSystem sys = lattice(cfg, 8, 8, 8, Vec3::Constant(0.05), Aabb{Vec3::Zero(), Vec3(0.8, 0.6, 0.45)});
  const double mass = sys.total_fluid_mass();
  std::vector<StepStats> log;
  const RolloutSummary s = run_rollout(sys, cfg, 10, [](const Snapshot&) {}, &log);
  CHECK(s.total_fluid_mass_final == mass);
  CHECK(s.escaped_particles == 0);
  CHECK(s.nonconverged_steps == 0);
  REQUIRE(log.size() == 60);
  for (const StepStats& st : log) {
    CHECK(st.divergence_error <= cfg.divergence_tolerance);
    CHECK(st.density_error <= cfg.density_tolerance);
  }
  CHECK(s.max_observed_compression <= 0.01);
}

TEST_CASE("snapshot cadence") {
  SimulationConfig cfg;
  cfg.steps = 0;
  ParticleSystem a = lattice(cfg, 2, 2, 2, Vec3::Constant(0.4), Aabb{Vec3::Zero(), Vec3::Ones()});
  CHECK(run_rollout(a, cfg, 10).snapshots.size() == 1);
  cfg.steps = 750;
  ParticleSystem b = lattice(cfg, 2, 2, 2, Vec3::Constant(0.4), Aabb{Vec3::Zero(), Vec3::Ones()});
  const RolloutTrace t = run_rollout(b, cfg, 10);
  CHECK(t.snapshots.size() == 76);
  CHECK(t.snapshots.back().step == 750);
  CHECK(t.summary.snapshots == 76);
}

TEST_CASE("deterministic rollouts are bit identical") {
  SimulationConfig cfg;
  cfg.steps = 20;
  const Aabb box{Vec3::Zero(), Vec3(0.6, 0.6, 0.4)};
  ParticleSystem a = lattice(cfg, 6, 6, 6, Vec3::Constant(0.05), box);
  ParticleSystem b = lattice(cfg, 6, 6, 6, Vec3::Constant(0.05), box);
  for (auto* s : {&a, &b})
    for (auto& v : s->velocities) v = Vec3(1.0, 0.0, 0.5);
  const RolloutTrace ta = run_rollout(a, cfg, 5);
  const RolloutTrace tb = run_rollout(b, cfg, 5);
  REQUIRE(ta.snapshots.size() == tb.snapshots.size());
  for (std::size_t k = 0; k < ta.snapshots.size(); ++k) {
    const auto& x = ta.snapshots[k];
    const auto& y = tb.snapshots[k];
    CHECK(std::memcmp(x.positions.data(), y.positions.data(), x.positions.size() * sizeof(Vec3)) == 0);
    CHECK(std::memcmp(x.divergence.data(), y.divergence.data(), x.divergence.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("non-finite state raises a simulation error with the step") {
  SimulationConfig cfg;
  ParticleSystem sys = lattice(cfg, 3, 3, 3, Vec3::Constant(0.4), Aabb{Vec3::Zero(), Vec3::Ones()});
  sys.velocities[4] = Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0);
  NeighborGrid grid(sys.positions, cfg.cutoff_radius, sys.domain);
  try {
    dfsph_step(sys, grid, cfg, 7);
    FAIL("expected a simulation error");
  } catch (const SimulationError& e) {
    CHECK(e.step() == 7);
  }
}

TEST_CASE("CFL time step") {
  CHECK(cfl_timestep(3.0) == doctest::Approx(0.002));
  CHECK(cfl_timestep(6.0) == doctest::Approx(0.001));
  CHECK(cfl_timestep(50.0) == doctest::Approx(0.00012));
  CHECK_THROWS_AS(cfl_timestep(0.0), InputError);
  CHECK_THROWS_AS(cfl_timestep(-1.0), InputError);
}

TEST_CASE("Reynolds number") {
  CHECK(reynolds_number(1000, 3, 3, 10) == doctest::Approx(900));
  CHECK(reynolds_number(1000, 6, 3, 10) == doctest::Approx(2 * reynolds_number(1000, 3, 3, 10)));
  CHECK(reynolds_number(1000, 3, 3, 1e12) < 1e-6);
  CHECK_THROWS_AS(reynolds_number(0, 3, 3, 10), InputError);
  CHECK_THROWS_AS(reynolds_number(1000, 3, 3, 0), InputError);
}

TEST_CASE("config validation") {
  SimulationConfig cfg;
  cfg.time_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SimulationConfig{};
  cfg.min_iterations = 5;
  cfg.max_iterations = 2;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}
