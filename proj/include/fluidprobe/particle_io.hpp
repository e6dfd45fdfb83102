#pragma once

#include "fluidprobe/sph.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

namespace fluidprobe {

/// Particle columns shared by the CSV and VTK writers. `kinds` may be empty,
/// in which case every particle is written as fluid.
struct ParticleView {
  std::span<const Vec3> positions;
  std::span<const Vec3> velocities;
  std::span<const double> divergence;
  std::span<const ParticleKind> kinds;
};

ParticleView view_of(const ParticleSystem& sys);
ParticleView view_of(const Snapshot& snap);

/// Header x,y,z,vx,vy,vz,divergence,type; floats with 9 significant digits.
void write_particles_csv(const ParticleView& particles, std::ostream& out);
/// Legacy ASCII POLYDATA with vertices, velocity vectors and scalar fields.
void write_particles_vtk(const ParticleView& particles, std::ostream& out, const std::string& title = "fluidprobe");

/// "%.9g"; the CSV float format used everywhere.
std::string format_float(double v);

}  // namespace fluidprobe
