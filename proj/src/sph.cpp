#include "fluidprobe/sph.hpp"

#include "fluidprobe/metric.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace fluidprobe {

namespace {
// Particles with fewer neighbors than this skip the divergence solve.
constexpr std::size_t kMinNeighborsForDivergence = 20;

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) throw InputError(std::string("config: ") + name + " must be positive");
}
}  // namespace

void SimulationConfig::validate() const {
  require_positive(time_step, "time_step");
  require_positive(particle_radius, "particle_radius");
  require_positive(cutoff_radius, "cutoff_radius");
  require_positive(kernel_radius, "kernel_radius");
  require_positive(fluid_density, "fluid_density");
  require_positive(rigid_density, "rigid_density");
  require_positive(density_tolerance, "density_tolerance");
  require_positive(divergence_tolerance, "divergence_tolerance");
  require_positive(slab_thickness, "slab_thickness");
  require_positive(n_sigma, "n_sigma");
  require_positive(membership_multiplier, "membership_multiplier");
  if (steps < 0) throw InputError("config: steps must be >= 0");
  if (snapshot_stride <= 0) throw InputError("config: snapshot_stride must be positive");
  if (!(viscosity >= 0.0)) throw InputError("config: viscosity must be >= 0");
  if (!(speed >= 0.0)) throw InputError("config: speed must be >= 0");
  if (max_iterations < 1 || min_iterations < 0 || min_iterations > max_iterations)
    throw InputError("config: need 0 <= min_iterations <= max_iterations, max_iterations >= 1");
  if (opacity_threshold < 0.0 || opacity_threshold > 1.0) throw InputError("config: opacity_threshold must be in [0,1]");
  if (voxel_spacing < 0.0 || slab_padding < 0.0 || domain_padding < 0.0)
    throw InputError("config: spacing and padding values must be >= 0");
  if (!gravity.allFinite()) throw InputError("config: gravity must be finite");
  if (domain && domain->is_empty()) throw InputError("config: fixed domain is empty");
}

void ParticleSystem::resize(std::size_t n) {
  positions.resize(n, Vec3::Zero());
  velocities.resize(n, Vec3::Zero());
  volumes.resize(n, 0.0);
  densities.resize(n, 0.0);
  factors.resize(n, 0.0);
  divergence.resize(n, 0.0);
  kinds.resize(n, ParticleKind::kFluid);
}

DfsphSolver::DfsphSolver(const SimulationConfig& cfg) : cfg_(cfg), kernel_(cfg.kernel_radius) { cfg_.validate(); }

double DfsphSolver::reduce(const std::vector<double>& values, std::size_t count) const {
  double sum = 0.0;
  if (cfg_.deterministic) {
    for (std::size_t i = 0; i < count; ++i) sum += values[i];
  } else {
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long i = 0; i < static_cast<long>(count); ++i) sum += values[i];
  }
  return sum;
}

void DfsphSolver::compute_densities(ParticleSystem& sys) {
  const long nf = static_cast<long>(sys.fluid_count);
  const double self = sys.fluid_mass * kernel_.value_at(0.0);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    double rho = self;
    const Vec3& xi = sys.positions[i];
    for (int j : neighbors_.of(i)) {
      const Vec3 r = xi - sys.positions[j];
      rho += sys.mass(j) * kernel_.value_at(r.norm());
    }
    sys.densities[i] = rho;
  }
  for (std::size_t b = sys.fluid_count; b < sys.size(); ++b) sys.densities[b] = sys.rigid_density;
}

void DfsphSolver::compute_factors(ParticleSystem& sys) {
  const long nf = static_cast<long>(sys.fluid_count);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    Vec3 sum_grad = Vec3::Zero();
    double sum_sq = 0.0;
    const Vec3& xi = sys.positions[i];
    for (int j : neighbors_.of(i)) {
      const Vec3 r = xi - sys.positions[j];
      const Vec3 g = sys.mass(j) * kernel_.gradient_at(r, r.norm());
      sum_grad += g;
      if (static_cast<std::size_t>(j) < sys.fluid_count) sum_sq += g.squaredNorm();
    }
    const double denom = sum_grad.squaredNorm() + sum_sq;
    sys.factors[i] = denom > 1.0e-9 ? sys.densities[i] / denom : 0.0;
  }
}

void DfsphSolver::apply_non_pressure_forces(ParticleSystem& sys) {
  const long nf = static_cast<long>(sys.fluid_count);
  const double h2 = cfg_.kernel_radius * cfg_.kernel_radius;
  // Laplacian viscosity, 2 (d + 2) nu with d = 3.
  const double visc = 10.0 * sys.viscosity / sys.rest_density;
  accel_.assign(sys.fluid_count, Vec3::Zero());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    Vec3 a = sys.gravity;
    if (visc > 0.0) {
      const Vec3& xi = sys.positions[i];
      const Vec3& vi = sys.velocities[i];
      for (int j : neighbors_.of(i)) {
        const Vec3 xij = xi - sys.positions[j];
        const Vec3 vij = vi - sys.velocities[j];
        const double d2 = xij.squaredNorm();
        const double vol = static_cast<std::size_t>(j) < sys.fluid_count ? sys.fluid_mass / sys.densities[j]
                                                                         : sys.volumes[j];
        a += visc * vol * vij.dot(xij) / (d2 + 0.01 * h2) * kernel_.gradient_at(xij, std::sqrt(d2));
      }
    }
    accel_[i] = a;
  }
  const double dt = cfg_.time_step;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) sys.velocities[i] += dt * accel_[i];
}

void DfsphSolver::compute_density_rate(const ParticleSystem& sys) {
  const long nf = static_cast<long>(sys.fluid_count);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    const auto nbrs = neighbors_.of(i);
    if (nbrs.size() < kMinNeighborsForDivergence) {
      residual_[i] = 0.0;
      continue;
    }
    double rate = 0.0;
    const Vec3& xi = sys.positions[i];
    const Vec3& vi = sys.velocities[i];
    for (int j : nbrs) {
      const Vec3 r = xi - sys.positions[j];
      rate += sys.mass(j) * (vi - sys.velocities[j]).dot(kernel_.gradient_at(r, r.norm()));
    }
    residual_[i] = std::max(rate, 0.0);
  }
}

void DfsphSolver::compute_predicted_density(const ParticleSystem& sys) {
  const long nf = static_cast<long>(sys.fluid_count);
  const double dt = cfg_.time_step;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    double rate = 0.0;
    const Vec3& xi = sys.positions[i];
    const Vec3& vi = sys.velocities[i];
    for (int j : neighbors_.of(i)) {
      const Vec3 r = xi - sys.positions[j];
      rate += sys.mass(j) * (vi - sys.velocities[j]).dot(kernel_.gradient_at(r, r.norm()));
    }
    residual_[i] = std::max(sys.densities[i] + dt * rate - sys.rest_density, 0.0);
  }
}

void DfsphSolver::apply_pressure(ParticleSystem& sys, double dt) {
  const long nf = static_cast<long>(sys.fluid_count);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    const double si = stiffness_[i];
    const Vec3& xi = sys.positions[i];
    Vec3 dv = Vec3::Zero();
    for (int j : neighbors_.of(i)) {
      const Vec3 r = xi - sys.positions[j];
      const Vec3 g = kernel_.gradient_at(r, r.norm());
      if (static_cast<std::size_t>(j) < sys.fluid_count) {
        const double s = si + stiffness_[j];
        if (s != 0.0) dv -= sys.fluid_mass * s * g;
      } else if (si != 0.0) {
        dv -= sys.mass(j) * si * g;
      }
    }
    sys.velocities[i] += dt * dv;
  }
}

void DfsphSolver::divergence_solve(ParticleSystem& sys, StepStats& stats) {
  const std::size_t nf = sys.fluid_count;
  const double dt = cfg_.time_step;
  const double scale = nf > 0 ? dt / (sys.rest_density * static_cast<double>(nf)) : 0.0;
  int iter = 0;
  double err = 0.0;
  for (;;) {
    compute_density_rate(sys);
    err = reduce(residual_, nf) * scale;
    if (!std::isfinite(err)) throw SimulationError("non-finite pressure solver residual", stats.step);
    if ((err <= cfg_.divergence_tolerance && iter >= cfg_.min_iterations) || iter >= cfg_.max_iterations) break;
    for (std::size_t i = 0; i < nf; ++i)
      stiffness_[i] = residual_[i] / dt * sys.factors[i] / sys.densities[i];
    apply_pressure(sys, dt);
    ++iter;
  }
  stats.divergence_iterations = iter;
  stats.divergence_error = err;
  stats.divergence_converged = err <= cfg_.divergence_tolerance;
}

void DfsphSolver::density_solve(ParticleSystem& sys, StepStats& stats) {
  const std::size_t nf = sys.fluid_count;
  const double dt = cfg_.time_step;
  const double scale = nf > 0 ? 1.0 / (sys.rest_density * static_cast<double>(nf)) : 0.0;
  int iter = 0;
  double err = 0.0;
  for (;;) {
    compute_predicted_density(sys);
    err = reduce(residual_, nf) * scale;
    if (!std::isfinite(err)) throw SimulationError("non-finite pressure solver residual", stats.step);
    if ((err <= cfg_.density_tolerance && iter >= cfg_.min_iterations) || iter >= cfg_.max_iterations) break;
    for (std::size_t i = 0; i < nf; ++i)
      stiffness_[i] = residual_[i] / (dt * dt) * sys.factors[i] / sys.densities[i];
    apply_pressure(sys, dt);
    ++iter;
  }
  stats.density_iterations = iter;
  stats.density_error = err;
  stats.density_converged = err <= cfg_.density_tolerance;
}

std::size_t DfsphSolver::enforce_walls(ParticleSystem& sys) {
  std::size_t clamped = 0;
  const Aabb& box = sys.domain;
  for (std::size_t i = 0; i < sys.fluid_count; ++i) {
    Vec3& x = sys.positions[i];
    Vec3& v = sys.velocities[i];
    for (int a = 0; a < 3; ++a) {
      if (x[a] < box.min[a]) {
        x[a] = box.min[a];
        if (v[a] < 0.0) v[a] = 0.0;
        ++clamped;
      } else if (x[a] > box.max[a]) {
        x[a] = box.max[a];
        if (v[a] > 0.0) v[a] = 0.0;
        ++clamped;
      }
    }
  }
  return clamped;
}

StepStats DfsphSolver::step(ParticleSystem& sys, NeighborGrid& grid, long step_index) {
  StepStats stats;
  stats.step = step_index;
  const std::size_t nf = sys.fluid_count;
  const double dt = cfg_.time_step;
  residual_.assign(nf, 0.0);
  stiffness_.assign(nf, 0.0);

  update_neighbors(grid);
  compute_densities(sys);
  compute_factors(sys);
  for (std::size_t i = 0; i < nf; ++i) residual_[i] = std::max(sys.densities[i] - sys.rest_density, 0.0);
  stats.start_compression = nf > 0 ? reduce(residual_, nf) / (sys.rest_density * static_cast<double>(nf)) : 0.0;

  divergence_solve(sys, stats);
  apply_non_pressure_forces(sys);
  density_solve(sys, stats);

#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(nf); ++i) sys.positions[i] += dt * sys.velocities[i];
  stats.clamped = enforce_walls(sys);

  for (std::size_t i = 0; i < nf; ++i)
    if (!sys.positions[i].allFinite() || !sys.velocities[i].allFinite())
      throw SimulationError("non-finite particle state at particle " + std::to_string(i), step_index);

  grid = NeighborGrid(sys.positions, grid.cutoff(), grid.bounds());
  return stats;
}

StepStats dfsph_step(ParticleSystem& sys, NeighborGrid& grid, const SimulationConfig& cfg, long step_index) {
  DfsphSolver solver(cfg);
  return solver.step(sys, grid, step_index);
}

namespace {
Snapshot take_snapshot(ParticleSystem& sys, const NeighborGrid& grid, const SimulationConfig& cfg, long step) {
  const NeighborList nbrs = grid.all_neighbors();
  sys.divergence = particle_divergence(sys, nbrs, cfg.kernel_radius);
  Snapshot snap;
  snap.step = step;
  snap.positions.assign(sys.positions.begin(), sys.positions.begin() + sys.fluid_count);
  snap.velocities.assign(sys.velocities.begin(), sys.velocities.begin() + sys.fluid_count);
  snap.divergence.assign(sys.divergence.begin(), sys.divergence.begin() + sys.fluid_count);
  return snap;
}

double snapshot_mean(const Snapshot& s) {
  if (s.divergence.empty()) return 0.0;
  double sum = 0.0;
  for (double d : s.divergence) sum += d;
  return sum / static_cast<double>(s.divergence.size());
}
}  // namespace

RolloutSummary run_rollout(ParticleSystem& sys, const SimulationConfig& cfg, long stride,
                           const SnapshotObserver& observer, std::vector<StepStats>* step_log) {
  cfg.validate();
  if (stride <= 0) throw InputError("snapshot stride must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  RolloutSummary summary;
  summary.fluid_particles = sys.fluid_count;
  summary.rigid_particles = sys.rigid_count();
  summary.total_fluid_mass_initial = sys.total_fluid_mass();
  summary.min_density = std::numeric_limits<double>::infinity();
  summary.max_density = 0.0;

  DfsphSolver solver(cfg);
  NeighborGrid grid(sys.positions, cfg.cutoff_radius, sys.domain);
  double divergence_sum = 0.0;

  auto emit = [&](long step) {
    Snapshot snap = take_snapshot(sys, grid, cfg, step);
    divergence_sum += snapshot_mean(snap);
    ++summary.snapshots;
    if (observer) observer(snap);
  };

  emit(0);
  for (long s = 1; s <= cfg.steps; ++s) {
    StepStats st = solver.step(sys, grid, s);
    for (std::size_t i = 0; i < sys.fluid_count; ++i) {
      summary.min_density = std::min(summary.min_density, sys.densities[i]);
      summary.max_density = std::max(summary.max_density, sys.densities[i]);
    }
    summary.max_divergence_error = std::max(summary.max_divergence_error, st.divergence_error);
    summary.max_density_error = std::max(summary.max_density_error, st.density_error);
    summary.max_observed_compression = std::max(summary.max_observed_compression, st.start_compression);
    if (!st.divergence_converged || !st.density_converged) {
      ++summary.nonconverged_steps;
      if (summary.warnings.size() < 20) {
        std::ostringstream msg;
        msg << "step " << s << ": " << (!st.divergence_converged ? "divergence" : "density")
            << " solver stopped at max iterations (error "
            << (!st.divergence_converged ? st.divergence_error : st.density_error) << ")";
        summary.warnings.push_back(msg.str());
      }
    }
    if (step_log) step_log->push_back(st);
    if (s % stride == 0) emit(s);
  }

  summary.max_observed_compression = std::max(summary.max_observed_compression, mean_compression(sys, cfg));
  if (sys.fluid_count == 0) summary.min_density = 0.0;
  summary.steps = cfg.steps;
  summary.total_fluid_mass_final = sys.total_fluid_mass();
  for (std::size_t i = 0; i < sys.fluid_count; ++i)
    if (!sys.domain.contains(sys.positions[i], 1e-12)) ++summary.escaped_particles;
  summary.mean_particle_divergence = summary.snapshots > 0 ? divergence_sum / static_cast<double>(summary.snapshots) : 0.0;
  summary.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

RolloutTrace run_rollout(ParticleSystem& sys, const SimulationConfig& cfg, long stride) {
  RolloutTrace trace;
  trace.summary = run_rollout(
      sys, cfg, stride, [&](const Snapshot& s) { trace.snapshots.push_back(s); }, &trace.steps);
  return trace;
}

double cfl_timestep(double speed, double base_timestep, double base_speed) {
  if (!std::isfinite(speed) || speed <= 0.0) throw InputError("cfl_timestep: speed must be positive");
  return base_timestep * base_speed / speed;
}

double reynolds_number(double density, double speed, double length, double viscosity) {
  for (double v : {density, speed, length, viscosity})
    if (!std::isfinite(v) || v <= 0.0) throw InputError("reynolds_number: inputs must be positive");
  return density * speed * length / viscosity;
}

double mean_compression(const ParticleSystem& sys, const SimulationConfig& cfg) {
  if (sys.fluid_count == 0) return 0.0;
  const NeighborGrid grid(sys.positions, cfg.cutoff_radius, sys.domain);
  const NeighborList nbrs = grid.all_neighbors();
  const CubicSplineKernel kernel(cfg.kernel_radius);
  const double self = sys.fluid_mass * kernel.value_at(0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < sys.fluid_count; ++i) {
    double rho = self;
    for (int j : nbrs.of(i)) rho += sys.mass(j) * kernel.value_at((sys.positions[i] - sys.positions[j]).norm());
    sum += std::max(rho - sys.rest_density, 0.0);
  }
  return sum / (sys.rest_density * static_cast<double>(sys.fluid_count));
}

}  // namespace fluidprobe
