#include "fluidprobe/probe.hpp"

#include <algorithm>
#include <numeric>

namespace fluidprobe {

const std::vector<double>* ProbeResult::ic_divergence(FlowDirection d) const {
  for (const IcRun& r : runs)
    if (r.direction == d) return &r.aggregate.mean_divergence;
  return nullptr;
}

double ProbeResult::mean_particle_divergence() const {
  if (runs.empty()) return 0.0;
  double sum = 0.0;
  for (const IcRun& r : runs) sum += r.summary.mean_particle_divergence;
  return sum / static_cast<double>(runs.size());
}

VoxelizeOptions voxelize_options(const SimulationConfig& cfg) {
  VoxelizeOptions v;
  v.opacity_threshold = cfg.opacity_threshold;
  v.spacing = cfg.effective_voxel_spacing();
  v.n_sigma = cfg.n_sigma;
  v.kernel_radius = cfg.kernel_radius;
  v.rigid_density = cfg.rigid_density;
  return v;
}

namespace {
std::vector<FlowDirection> canonical_order(std::span<const FlowDirection> ics) {
  std::vector<FlowDirection> out(ics.begin(), ics.end());
  std::sort(out.begin(), out.end(), [](FlowDirection a, FlowDirection b) { return canonical_index(a) < canonical_index(b); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}
}  // namespace

ProbeResult probe_with_rigid(const GaussianScene& scene, const RigidParticleSet& rigid, const SimulationConfig& cfg,
                             std::span<const FlowDirection> ics) {
  if (scene.empty()) throw InputError("probe: scene has no Gaussians");
  if (ics.empty()) throw InputError("probe: no initial conditions selected");
  cfg.validate();

  ProbeResult result;
  result.config = cfg;
  result.rigid_particles = rigid.size();
  // Rollouts are independent; they run one after another here and are merged
  // in canonical order, so the result does not depend on scheduling.
  for (FlowDirection d : canonical_order(ics)) {
    FluidSlabSpec slab;
    slab.direction = d;
    slab.thickness = cfg.slab_thickness;
    slab.padding = cfg.effective_slab_padding();
    slab.speed = cfg.speed;
    ParticleSystem sys = build_domain(rigid, slab, cfg);
    IcRun run;
    run.direction = d;
    run.domain = sys.domain;
    GaussianAggregator agg(scene, cfg.membership_multiplier);
    try {
      run.summary = run_rollout(sys, cfg, cfg.snapshot_stride, [&](const Snapshot& s) { agg.add(s); });
    } catch (const SimulationError& e) {
      throw SimulationError("initial condition " + to_string(d) + ": " + e.what(), e.step());
    }
    run.aggregate = agg.finish();
    result.runs.push_back(std::move(run));
  }

  std::vector<std::vector<double>> per_ic;
  for (const IcRun& r : result.runs) per_ic.push_back(r.aggregate.mean_divergence);
  result.divergence = reduce_over_ics(per_ic);
  result.counts.assign(scene.size(), 0);
  for (const IcRun& r : result.runs)
    for (std::size_t g = 0; g < scene.size(); ++g) result.counts[g] = std::max(result.counts[g], r.aggregate.counts[g]);
  result.geometry_divergence = geometry_divergence(scene, result.divergence);
  return result;
}

ProbeResult probe_scene(const GaussianScene& scene, const SimulationConfig& cfg, std::span<const FlowDirection> ics) {
  if (scene.empty()) throw InputError("probe: scene has no Gaussians");
  if (ics.empty()) throw InputError("probe: no initial conditions selected");
  const RigidParticleSet rigid = voxelize(scene, voxelize_options(cfg));
  return probe_with_rigid(scene, rigid, cfg, ics);
}

ProbeResult probe_scene(const GaussianScene& scene, const SimulationConfig& cfg) {
  return probe_scene(scene, cfg, kAllDirections);
}

std::vector<RankedView> rank_by_counts(const GaussianScene& scene, std::span<const double> counts,
                                       const std::vector<CameraView>& poses, std::size_t top_k,
                                       const ScoreOptions& options) {
  std::vector<RankedView> ranked;
  if (top_k == 0) return ranked;
  if (poses.empty()) throw InputError("function-critical ranking: no poses");
  if (top_k > poses.size()) throw InputError("function-critical ranking: top_k exceeds pose count");
  ranked.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const ViewScore vs = score_view(poses[i], scene, {}, counts, options);
    ranked.push_back({i, poses[i].id, vs.count, vs.visible.size()});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedView& a, const RankedView& b) { return a.count_score > b.count_score; });
  ranked.resize(top_k);
  return ranked;
}

std::vector<RankedView> function_critical_views(const GaussianScene& scene, const SimulationConfig& cfg,
                                                FlowDirection direction, const std::vector<CameraView>& poses,
                                                std::size_t top_k, const ScoreOptions& options) {
  if (top_k == 0) return {};
  if (poses.empty()) throw InputError("function-critical ranking: no poses");
  if (top_k > poses.size()) throw InputError("function-critical ranking: top_k exceeds pose count");
  const FlowDirection one[] = {direction};
  const ProbeResult probe = probe_scene(scene, cfg, one);
  const std::vector<double> counts = probe.counts_as_double();
  return rank_by_counts(scene, counts, poses, top_k, options);
}

}  // namespace fluidprobe
