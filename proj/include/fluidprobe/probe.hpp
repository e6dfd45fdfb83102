#pragma once

#include "fluidprobe/camera.hpp"
#include "fluidprobe/metric.hpp"
#include "fluidprobe/scene.hpp"
#include "fluidprobe/sph.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace fluidprobe {

struct IcRun {
  FlowDirection direction = FlowDirection::kNegX;
  GaussianAggregate aggregate;
  RolloutSummary summary;
  Aabb domain{};
};

/// Per-Gaussian physics scores from a battery of initial conditions.
struct ProbeResult {
  std::vector<double> divergence;  // D_g = max over ICs
  std::vector<long> counts;        // |P_g|, max over ICs
  std::vector<IcRun> runs;         // canonical IC order
  double geometry_divergence = 0.0;
  std::size_t rigid_particles = 0;
  SimulationConfig config;

  /// Per-IC D_g for a canonical slot, if that IC was run.
  const std::vector<double>* ic_divergence(FlowDirection d) const;
  /// Mean particle divergence averaged over the ICs that were run.
  double mean_particle_divergence() const;
  std::vector<double> counts_as_double() const { return {counts.begin(), counts.end()}; }
};

VoxelizeOptions voxelize_options(const SimulationConfig& cfg);

/// Voxelizes `scene` once, runs one rollout per IC and reduces by max.
ProbeResult probe_scene(const GaussianScene& scene, const SimulationConfig& cfg, std::span<const FlowDirection> ics);
ProbeResult probe_scene(const GaussianScene& scene, const SimulationConfig& cfg);

/// Same battery against an explicit rigid set (possibly empty, with its
/// reference bounds set); aggregation still uses `scene`.
ProbeResult probe_with_rigid(const GaussianScene& scene, const RigidParticleSet& rigid, const SimulationConfig& cfg,
                             std::span<const FlowDirection> ics);

struct RankedView {
  std::size_t index = 0;
  std::string id;
  double count_score = 0.0;
  std::size_t visible = 0;
};

/// One rollout along `direction`, then poses ranked by C(T), descending.
std::vector<RankedView> function_critical_views(const GaussianScene& scene, const SimulationConfig& cfg,
                                                FlowDirection direction, const std::vector<CameraView>& poses,
                                                std::size_t top_k, const ScoreOptions& options = {});

/// Ranks poses by C(T) given precomputed counts.
std::vector<RankedView> rank_by_counts(const GaussianScene& scene, std::span<const double> counts,
                                       const std::vector<CameraView>& poses, std::size_t top_k,
                                       const ScoreOptions& options = {});

}  // namespace fluidprobe
