#pragma once

#include "fluidprobe/kernel.hpp"
#include "fluidprobe/neighbor_grid.hpp"
#include "fluidprobe/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fluidprobe {

/// Solver and probe constants. Defaults follow the reference simulation setup
/// (SI units throughout).
struct SimulationConfig {
  // time integration
  double time_step = 0.002;      // s
  long steps = 750;
  long snapshot_stride = 10;

  // discretization
  double particle_radius = 0.025;  // m
  double cutoff_radius = 0.1;      // neighbor cutoff h_r, m
  double kernel_radius = 0.1;      // kernel support h_k, m

  // material
  double fluid_density = 1000.0;   // kg/m^3
  double rigid_density = 2200.0;   // kg/m^3
  double viscosity = 10.0;         // dynamic, kg/(m s)
  double speed = 3.0;              // initial fluid speed, m/s
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);

  // pressure solvers
  double density_tolerance = 1.0e-3;     // mean compression / rho_0
  double divergence_tolerance = 1.0e-3;  // mean compression rate * dt / rho_0
  int max_iterations = 100;
  int min_iterations = 2;

  // geometry and initial conditions
  double opacity_threshold = 0.3;
  double voxel_spacing = 0.0;      // 0 -> particle diameter
  double n_sigma = 3.0;
  double slab_thickness = 0.3;     // m
  double slab_padding = 0.0;       // 0 -> two particle diameters
  double domain_padding = 0.1;     // fraction of rigid extent per side
  std::optional<Aabb> domain;      // fixed global domain; auto when empty
  double membership_multiplier = 3.0;

  bool deterministic = true;
  std::uint64_t seed = 0;

  double particle_diameter() const { return 2.0 * particle_radius; }
  double effective_voxel_spacing() const { return voxel_spacing > 0.0 ? voxel_spacing : particle_diameter(); }
  double effective_slab_padding() const { return slab_padding > 0.0 ? slab_padding : 2.0 * particle_diameter(); }
  double fluid_particle_volume() const { double d = particle_diameter(); return d * d * d; }
  double fluid_particle_mass() const { return fluid_density * fluid_particle_volume(); }

  /// Throws InputError on a physically meaningless combination.
  void validate() const;
};

enum class ParticleKind : std::uint8_t { kFluid = 0, kRigid = 1 };

/// Fluid particles occupy [0, fluid_count); rigid particles follow.
struct ParticleSystem {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<double> volumes;
  std::vector<double> densities;
  std::vector<double> factors;     // DFSPH alpha_i
  std::vector<double> divergence;  // |div v| per particle, 0 for rigid
  std::vector<ParticleKind> kinds;
  std::size_t fluid_count = 0;

  double rest_density = 1000.0;
  double rigid_density = 2200.0;
  double fluid_mass = 0.125;       // per fluid particle, kg
  double viscosity = 10.0;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  Aabb domain{};

  std::size_t size() const { return positions.size(); }
  std::size_t rigid_count() const { return size() - fluid_count; }
  /// m_j for fluid, rho_0 * V_b for boundary particles.
  double mass(std::size_t j) const { return j < fluid_count ? fluid_mass : rest_density * volumes[j]; }
  double total_fluid_mass() const { return fluid_mass * static_cast<double>(fluid_count); }
  void resize(std::size_t n);
};

/// Diagnostics for one DFSPH step.
struct StepStats {
  long step = 0;
  int divergence_iterations = 0;
  int density_iterations = 0;
  double divergence_error = 0.0;   // mean compression rate * dt / rho_0 after the solve
  double density_error = 0.0;      // mean predicted compression / rho_0 after the solve
  bool divergence_converged = true;
  bool density_converged = true;
  std::size_t clamped = 0;         // wall contacts this step
  double start_compression = 0.0;  // mean(max(rho - rho_0, 0)) / rho_0 before the solves
};

/// Owns scratch buffers for repeated DFSPH steps on one system.
class DfsphSolver {
 public:
  explicit DfsphSolver(const SimulationConfig& cfg);

  /// One full step. `grid` must index the current positions and is rebuilt
  /// over the advected positions before returning.
  StepStats step(ParticleSystem& sys, NeighborGrid& grid, long step_index);

  const NeighborList& neighbors() const { return neighbors_; }
  const SimulationConfig& config() const { return cfg_; }

  /// Density and DFSPH factor for every fluid particle from current neighbors.
  void compute_densities(ParticleSystem& sys);
  void update_neighbors(const NeighborGrid& grid) { neighbors_ = grid.all_neighbors(); }

 private:
  void compute_factors(ParticleSystem& sys);
  void apply_non_pressure_forces(ParticleSystem& sys);
  void divergence_solve(ParticleSystem& sys, StepStats& stats);
  void density_solve(ParticleSystem& sys, StepStats& stats);
  void compute_density_rate(const ParticleSystem& sys);
  void compute_predicted_density(const ParticleSystem& sys);
  void apply_pressure(ParticleSystem& sys, double dt);
  std::size_t enforce_walls(ParticleSystem& sys);
  double reduce(const std::vector<double>& values, std::size_t count) const;

  SimulationConfig cfg_;
  CubicSplineKernel kernel_;
  NeighborList neighbors_;
  std::vector<double> stiffness_;   // kappa_i / rho_i
  std::vector<double> residual_;
  std::vector<Vec3> accel_;
};

/// Free-function form of DfsphSolver::step.
StepStats dfsph_step(ParticleSystem& sys, NeighborGrid& grid, const SimulationConfig& cfg, long step_index = 0);

/// Per-particle state captured during a rollout (fluid particles only).
struct Snapshot {
  long step = 0;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<double> divergence;
};

struct RolloutSummary {
  long steps = 0;
  std::size_t fluid_particles = 0;
  std::size_t rigid_particles = 0;
  double total_fluid_mass_initial = 0.0;
  double total_fluid_mass_final = 0.0;
  double min_density = 0.0;
  double max_density = 0.0;
  double max_divergence_error = 0.0;
  double max_density_error = 0.0;
  double max_observed_compression = 0.0;  // mean(max(rho - rho_0, 0)) / rho_0 at step end
  double mean_particle_divergence = 0.0;  // over fluid particles and snapshots
  std::size_t escaped_particles = 0;
  std::size_t nonconverged_steps = 0;
  std::size_t snapshots = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct RolloutTrace {
  std::vector<Snapshot> snapshots;
  std::vector<StepStats> steps;
  RolloutSummary summary;
};

using SnapshotObserver = std::function<void(const Snapshot&)>;

/// Runs cfg.steps DFSPH steps, emitting a snapshot at step 0 and every
/// `stride` steps. Snapshots go to `observer` and are not retained.
RolloutSummary run_rollout(ParticleSystem& sys, const SimulationConfig& cfg, long stride,
                           const SnapshotObserver& observer, std::vector<StepStats>* step_log = nullptr);

/// Same as above but keeps every snapshot in the returned trace.
RolloutTrace run_rollout(ParticleSystem& sys, const SimulationConfig& cfg, long stride);

/// dt = dt_base * U_base / U with dt_base = 0.002 s and U_base = 3 m/s.
double cfl_timestep(double speed, double base_timestep = 0.002, double base_speed = 3.0);

/// Re = rho U L / mu.
double reynolds_number(double density, double speed, double length, double viscosity);

/// Mean over fluid particles of max(rho_i - rho_0, 0) / rho_0 for the current
/// positions (fresh density evaluation).
double mean_compression(const ParticleSystem& sys, const SimulationConfig& cfg);

}  // namespace fluidprobe
