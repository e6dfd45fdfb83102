#include "fluidprobe/scene.hpp"

#include "fluidprobe/kernel.hpp"
#include "fluidprobe/neighbor_grid.hpp"
#include "fluidprobe/sph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace fluidprobe {

Eigen::Matrix3d Gaussian::covariance() const {
  const Eigen::Matrix3d r = rotation.toRotationMatrix();
  return r * scale.cwiseAbs2().asDiagonal() * r.transpose();
}

double Gaussian::mahalanobis_squared(const Vec3& p) const {
  const Vec3 local = rotation.conjugate() * (p - center);
  return local.cwiseQuotient(scale).squaredNorm();
}

Vec3 Gaussian::half_extent(double n_sigma) const {
  return n_sigma * covariance().diagonal().cwiseSqrt();
}

void validate_gaussian(const Gaussian& g, std::size_t index) {
  const std::string where = "gaussian record " + std::to_string(index) + ": ";
  if (!g.center.allFinite()) throw InputError(where + "field 'center' is not finite");
  if (!g.scale.allFinite() || (g.scale.array() <= 0.0).any())
    throw InputError(where + "field 'scale' must be finite and positive");
  if (!g.rotation.coeffs().allFinite() || std::abs(g.rotation.norm() - 1.0) > 1e-6)
    throw InputError(where + "field 'rotation' must be a unit quaternion");
  if (!std::isfinite(g.opacity) || g.opacity < 0.0 || g.opacity > 1.0)
    throw InputError(where + "field 'opacity' must be in [0, 1]");
}

Aabb GaussianScene::center_bounds() const {
  Aabb box = Aabb::empty();
  for (const Gaussian& g : gaussians) box.expand(g.center);
  return box;
}

// --- voxelization ----------------------------------------------------------

namespace {
struct LatticeKey {
  std::int64_t x, y, z;
  bool operator==(const LatticeKey&) const = default;
  bool operator<(const LatticeKey& o) const {
    if (z != o.z) return z < o.z;
    if (y != o.y) return y < o.y;
    return x < o.x;
  }
};
struct LatticeKeyHash {
  std::size_t operator()(const LatticeKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};
struct Occupant {
  int gaussian;
  double distance2;  // Mahalanobis, squared
};
}  // namespace

std::vector<double> boundary_volumes(const std::vector<Vec3>& positions, double kernel_radius) {
  std::vector<double> volumes(positions.size(), 0.0);
  if (positions.empty()) return volumes;
  const CubicSplineKernel kernel(kernel_radius);
  const NeighborGrid grid(positions, kernel_radius, Aabb::empty());
  const NeighborList nbrs = grid.all_neighbors();
  const double self = kernel.value_at(0.0);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < static_cast<long>(positions.size()); ++b) {
    double sum = self;
    for (int k : nbrs.of(b)) sum += kernel.value_at((positions[b] - positions[k]).norm());
    volumes[b] = 1.0 / sum;
  }
  return volumes;
}

RigidParticleSet voxelize(const GaussianScene& scene, const VoxelizeOptions& options) {
  if (!(options.spacing > 0.0) || !std::isfinite(options.spacing)) throw InputError("voxelize: spacing must be positive");
  if (!(options.opacity_threshold >= 0.0 && options.opacity_threshold <= 1.0))
    throw InputError("voxelize: opacity threshold must be in [0, 1]");
  if (!(options.n_sigma > 0.0)) throw InputError("voxelize: n_sigma must be positive");

  const double h = options.spacing;
  const double cut2 = options.n_sigma * options.n_sigma;
  std::unordered_map<LatticeKey, Occupant, LatticeKeyHash> occupied;
  bool any = false;
  for (std::size_t gi = 0; gi < scene.size(); ++gi) {
    const Gaussian& g = scene.gaussians[gi];
    if (g.opacity < options.opacity_threshold) continue;
    any = true;
    const Vec3 half = g.half_extent(options.n_sigma);
    const Vec3 lo = g.center - half;
    const Vec3 hi = g.center + half;
    const auto k0 = [&](int a) { return static_cast<std::int64_t>(std::ceil(lo[a] / h)); };
    const auto k1 = [&](int a) { return static_cast<std::int64_t>(std::floor(hi[a] / h)); };
    for (std::int64_t z = k0(2); z <= k1(2); ++z)
      for (std::int64_t y = k0(1); y <= k1(1); ++y)
        for (std::int64_t x = k0(0); x <= k1(0); ++x) {
          const Vec3 p(x * h, y * h, z * h);
          const double d2 = g.mahalanobis_squared(p);
          if (d2 > cut2) continue;
          const LatticeKey key{x, y, z};
          auto [it, inserted] = occupied.try_emplace(key, Occupant{static_cast<int>(gi), d2});
          if (!inserted && d2 < it->second.distance2) it->second = Occupant{static_cast<int>(gi), d2};
        }
  }
  if (!any) throw InputError("scene fully transparent: no Gaussian reaches the opacity threshold");

  std::vector<std::pair<LatticeKey, Occupant>> cells(occupied.begin(), occupied.end());
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  RigidParticleSet out;
  out.density = options.rigid_density;
  out.positions.reserve(cells.size());
  out.source.reserve(cells.size());
  for (const auto& [key, occ] : cells) {
    const Vec3 p(key.x * h, key.y * h, key.z * h);
    out.positions.push_back(p);
    out.source.push_back(occ.gaussian);
    out.bounds.expand(p);
  }
  out.volumes = boundary_volumes(out.positions, options.kernel_radius);
  return out;
}

// --- directions ------------------------------------------------------------

Vec3 unit_vector(FlowDirection d) {
  switch (d) {
    case FlowDirection::kPosX: return Vec3::UnitX();
    case FlowDirection::kNegX: return -Vec3::UnitX();
    case FlowDirection::kPosZ: return Vec3::UnitZ();
    case FlowDirection::kNegZ: return -Vec3::UnitZ();
    case FlowDirection::kNegY: return -Vec3::UnitY();
  }
  return Vec3::Zero();
}

std::string to_string(FlowDirection d) {
  switch (d) {
    case FlowDirection::kPosX: return "+x";
    case FlowDirection::kNegX: return "-x";
    case FlowDirection::kPosZ: return "+z";
    case FlowDirection::kNegZ: return "-z";
    case FlowDirection::kNegY: return "-y";
  }
  return "?";
}

int canonical_index(FlowDirection d) { return static_cast<int>(d); }

FlowDirection parse_direction(std::string_view text) {
  std::string t(text);
  t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "x" || t == "+x") return FlowDirection::kPosX;
  if (t == "-x") return FlowDirection::kNegX;
  if (t == "z" || t == "+z") return FlowDirection::kPosZ;
  if (t == "-z") return FlowDirection::kNegZ;
  if (t == "-y" || t == "top") return FlowDirection::kNegY;
  if (t == "y" || t == "+y") throw InputError("direction +y (bottom-up) is not a supported initial condition");
  throw InputError("unknown flow direction '" + std::string(text) + "'");
}

std::vector<FlowDirection> parse_directions(std::string_view comma_list) {
  std::vector<FlowDirection> out;
  std::size_t start = 0;
  while (start <= comma_list.size()) {
    const std::size_t end = std::min(comma_list.find(',', start), comma_list.size());
    const auto token = comma_list.substr(start, end - start);
    if (!token.empty()) {
      const FlowDirection d = parse_direction(token);
      if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
    start = end + 1;
  }
  return out;
}

// --- fluid initial conditions ----------------------------------------------

Aabb slab_box(const Aabb& rigid_bounds, const FluidSlabSpec& slab) {
  if (rigid_bounds.is_empty()) throw InputError("slab placement needs a non-empty rigid bounding box");
  if (!(slab.thickness > 0.0)) throw InputError("slab thickness must be positive");
  if (!(slab.padding >= 0.0)) throw InputError("slab padding must be >= 0");
  const Vec3 d = unit_vector(slab.direction);
  int axis = 0;
  d.cwiseAbs().maxCoeff(&axis);
  Aabb box = rigid_bounds;
  if (d[axis] < 0.0) {
    box.min[axis] = rigid_bounds.max[axis] + slab.padding;
    box.max[axis] = box.min[axis] + slab.thickness;
  } else {
    box.max[axis] = rigid_bounds.min[axis] - slab.padding;
    box.min[axis] = box.max[axis] - slab.thickness;
  }
  return box;
}

ParticleSystem build_domain(const RigidParticleSet& rigid, const FluidSlabSpec& slab, const SimulationConfig& cfg) {
  cfg.validate();
  if (!(slab.speed >= 0.0)) throw InputError("slab speed must be >= 0");
  Aabb rigid_box = rigid.bounds;
  if (rigid_box.is_empty())
    for (const Vec3& p : rigid.positions) rigid_box.expand(p);
  if (rigid_box.is_empty()) throw InputError("build_domain: rigid bounding box is unknown");

  const Aabb fluid_box = slab_box(rigid_box, slab);
  Aabb domain;
  if (cfg.domain) {
    domain = *cfg.domain;
    if (!domain.contains(fluid_box, 1e-9)) throw InputError("fluid slab falls outside the fixed simulation domain");
  } else {
    domain = rigid_box.padded(Vec3::Constant(cfg.domain_padding * rigid_box.extent().maxCoeff()));
    domain.expand(fluid_box);
  }

  const double spacing = cfg.particle_diameter();
  std::array<long, 3> count{};
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const double ext = fluid_box.max[a] - fluid_box.min[a];
    count[a] = std::max(1L, static_cast<long>(std::floor(ext / spacing + 1e-9)));
    origin[a] = fluid_box.min[a] + 0.5 * (ext - static_cast<double>(count[a]) * spacing) + 0.5 * spacing;
  }
  const std::size_t nf = static_cast<std::size_t>(count[0] * count[1] * count[2]);
  // Top-down release starts from rest and is driven by gravity alone.
  const double speed = slab.direction == FlowDirection::kNegY ? 0.0 : slab.speed;
  const Vec3 v0 = speed > 0.0 ? Vec3(speed * unit_vector(slab.direction)) : Vec3::Zero();

  ParticleSystem sys;
  sys.resize(nf + rigid.size());
  sys.fluid_count = nf;
  sys.rest_density = cfg.fluid_density;
  sys.rigid_density = cfg.rigid_density;
  sys.fluid_mass = cfg.fluid_particle_mass();
  sys.viscosity = cfg.viscosity;
  sys.gravity = cfg.gravity;
  sys.domain = domain;

  std::size_t i = 0;
  for (long z = 0; z < count[2]; ++z)
    for (long y = 0; y < count[1]; ++y)
      for (long x = 0; x < count[0]; ++x, ++i) {
        sys.positions[i] = origin + spacing * Vec3(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z));
        sys.velocities[i] = v0;
        sys.volumes[i] = cfg.fluid_particle_volume();
        sys.densities[i] = cfg.fluid_density;
        sys.kinds[i] = ParticleKind::kFluid;
      }
  for (std::size_t b = 0; b < rigid.size(); ++b, ++i) {
    sys.positions[i] = rigid.positions[b];
    sys.velocities[i] = Vec3::Zero();
    sys.volumes[i] = rigid.volumes.empty() ? cfg.fluid_particle_volume() : rigid.volumes[b];
    sys.densities[i] = cfg.rigid_density;
    sys.kinds[i] = ParticleKind::kRigid;
  }
  return sys;
}

}  // namespace fluidprobe
