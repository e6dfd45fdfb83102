#pragma once

#include "fluidprobe/types.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fluidprobe {

struct SimulationConfig;
struct ParticleSystem;

/// One anisotropic Gaussian primitive used as rigid geometry.
struct Gaussian {
  Vec3 center = Vec3::Zero();
  Vec3 scale = Vec3::Constant(0.01);  // principal semi-axes (standard deviations), m
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double opacity = 1.0;

  /// Largest principal radius of the covariance ellipsoid.
  double radius() const { return scale.maxCoeff(); }
  /// tr(Sigma) = sum of squared scales (rotation invariant).
  double trace() const { return scale.squaredNorm(); }
  Eigen::Matrix3d covariance() const;
  /// Squared Mahalanobis distance of p from the center.
  double mahalanobis_squared(const Vec3& p) const;
  /// Axis-aligned half extent of the n-sigma ellipsoid.
  Vec3 half_extent(double n_sigma) const;
};

/// Throws InputError naming `index` if the record violates Gaussian invariants.
void validate_gaussian(const Gaussian& g, std::size_t index);

struct GaussianScene {
  std::vector<Gaussian> gaussians;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
  /// Box around the Gaussian centers.
  Aabb center_bounds() const;
};

// --- geometry ingestion ---------------------------------------------------

/// Dispatches on extension: .json (verbatim records) or .ply (3DGS export).
GaussianScene load_scene(const std::filesystem::path& path);
GaussianScene parse_scene_json(std::string_view text);
GaussianScene read_scene_ply(std::istream& in);
/// Binary little-endian PLY with logit opacity and log scales.
void write_scene_ply(const GaussianScene& scene, std::ostream& out);
void write_scene_json(const GaussianScene& scene, std::ostream& out);
void save_scene_json(const GaussianScene& scene, const std::filesystem::path& path);

// --- voxelization ---------------------------------------------------------

struct VoxelizeOptions {
  double opacity_threshold = 0.3;
  double spacing = 0.05;  // lattice spacing, m (particle diameter)
  double n_sigma = 3.0;   // Mahalanobis cutoff
  double kernel_radius = 0.1;
  double rigid_density = 2200.0;
};

/// Static boundary particles sampled from the union of Gaussian ellipsoids.
struct RigidParticleSet {
  std::vector<Vec3> positions;
  std::vector<double> volumes;     // boundary pseudo-volume V_b, m^3
  std::vector<int> source;         // nearest contributing Gaussian
  double density = 2200.0;
  Aabb bounds = Aabb::empty();     // reference box used for slab placement

  std::size_t size() const { return positions.size(); }
};

RigidParticleSet voxelize(const GaussianScene& scene, const VoxelizeOptions& options);

/// V_b = 1 / sum_k W(x_b - x_k) over the rigid set (self term included).
std::vector<double> boundary_volumes(const std::vector<Vec3>& positions, double kernel_radius);

// --- fluid initial conditions ---------------------------------------------

/// Canonical flow directions. The fluid travels along the direction; the
/// slab starts on the opposite (upstream) side of the rigid body.
enum class FlowDirection { kPosX, kNegX, kPosZ, kNegZ, kNegY };

inline constexpr FlowDirection kAllDirections[] = {
    FlowDirection::kPosX, FlowDirection::kNegX, FlowDirection::kPosZ,
    FlowDirection::kNegZ, FlowDirection::kNegY};

Vec3 unit_vector(FlowDirection d);
std::string to_string(FlowDirection d);
/// Accepts "x", "+x", "-x", "z", "+z", "-z", "-y" (and "top"). Throws otherwise.
FlowDirection parse_direction(std::string_view text);
std::vector<FlowDirection> parse_directions(std::string_view comma_list);
int canonical_index(FlowDirection d);

struct FluidSlabSpec {
  FlowDirection direction = FlowDirection::kNegX;
  double thickness = 0.3;
  double padding = 0.1;
  double speed = 3.0;  // lambda, m/s
};

/// Fluid slab box for the given rigid reference box.
Aabb slab_box(const Aabb& rigid_bounds, const FluidSlabSpec& slab);

/// Seeds the slab and assembles fluid + rigid particles into one system.
ParticleSystem build_domain(const RigidParticleSet& rigid, const FluidSlabSpec& slab, const SimulationConfig& cfg);

}  // namespace fluidprobe
