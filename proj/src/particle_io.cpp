#include "fluidprobe/particle_io.hpp"

#include <cstdio>
#include <ostream>

namespace fluidprobe {

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

ParticleView view_of(const ParticleSystem& sys) {
  return {sys.positions, sys.velocities, sys.divergence, sys.kinds};
}

ParticleView view_of(const Snapshot& snap) {
  return {snap.positions, snap.velocities, snap.divergence, {}};
}

namespace {
int type_of(const ParticleView& p, std::size_t i) {
  return p.kinds.empty() ? 0 : static_cast<int>(p.kinds[i]);
}
void check(const ParticleView& p) {
  const std::size_t n = p.positions.size();
  if (p.velocities.size() != n || p.divergence.size() != n || (!p.kinds.empty() && p.kinds.size() != n))
    throw InputError("particle writer: column lengths differ");
}
}  // namespace

void write_particles_csv(const ParticleView& p, std::ostream& out) {
  check(p);
  out << "x,y,z,vx,vy,vz,divergence,type\n";
  for (std::size_t i = 0; i < p.positions.size(); ++i) {
    const Vec3& x = p.positions[i];
    const Vec3& v = p.velocities[i];
    out << format_float(x.x()) << ',' << format_float(x.y()) << ',' << format_float(x.z()) << ','
        << format_float(v.x()) << ',' << format_float(v.y()) << ',' << format_float(v.z()) << ','
        << format_float(p.divergence[i]) << ',' << type_of(p, i) << '\n';
  }
}

void write_particles_vtk(const ParticleView& p, std::ostream& out, const std::string& title) {
  check(p);
  const std::size_t n = p.positions.size();
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << n << " double\n";
  for (const Vec3& x : p.positions) out << format_float(x.x()) << ' ' << format_float(x.y()) << ' ' << format_float(x.z()) << '\n';
  out << "VERTICES " << n << ' ' << 2 * n << '\n';
  for (std::size_t i = 0; i < n; ++i) out << "1 " << i << '\n';
  out << "POINT_DATA " << n << '\n';
  out << "VECTORS velocity double\n";
  for (const Vec3& v : p.velocities) out << format_float(v.x()) << ' ' << format_float(v.y()) << ' ' << format_float(v.z()) << '\n';
  out << "SCALARS divergence double 1\nLOOKUP_TABLE default\n";
  for (double d : p.divergence) out << format_float(d) << '\n';
  out << "SCALARS type int 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < n; ++i) out << type_of(p, i) << '\n';
}

}  // namespace fluidprobe
