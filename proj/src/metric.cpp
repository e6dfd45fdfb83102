#include "fluidprobe/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fluidprobe {

std::vector<double> particle_divergence(const ParticleSystem& sys, const NeighborList& neighbors, double kernel_radius) {
  const CubicSplineKernel kernel(kernel_radius);
  std::vector<double> out(sys.size(), 0.0);
  const double fluid_volume = sys.fluid_mass / sys.rest_density;
  const long nf = static_cast<long>(sys.fluid_count);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nf; ++i) {
    const Vec3& xi = sys.positions[i];
    const Vec3& vi = sys.velocities[i];
    double div = 0.0;
    for (int j : neighbors.of(i)) {
      const Vec3 r = xi - sys.positions[j];
      const double vol = static_cast<std::size_t>(j) < sys.fluid_count ? fluid_volume : sys.volumes[j];
      div += vol * (sys.velocities[j] - vi).dot(kernel.gradient_at(r, r.norm()));
    }
    out[i] = std::abs(div);
  }
  for (long i = 0; i < nf; ++i)
    if (!std::isfinite(out[i])) throw SimulationError("non-finite divergence at particle " + std::to_string(i), -1);
  return out;
}

std::vector<double> particle_divergence(const ParticleSystem& sys, const NeighborGrid& grid, double kernel_radius) {
  if (grid.size() != sys.size()) throw InputError("particle_divergence: grid built over a different particle set");
  return particle_divergence(sys, grid.all_neighbors(), kernel_radius);
}

GaussianAggregator::GaussianAggregator(const GaussianScene& scene, double multiplier)
    : scene_(&scene), multiplier_(multiplier) {
  if (!std::isfinite(multiplier) || multiplier <= 0.0) throw InputError("membership multiplier must be positive");
  const std::size_t n = scene.size();
  sums_.assign(n, 0.0);
  events_.assign(n, 0);
  members_.resize(n);
  for (const Gaussian& g : scene.gaussians) max_radius_ = std::max(max_radius_, multiplier_ * g.radius());
}

void GaussianAggregator::add(const Snapshot& snapshot) {
  if (snapshot.positions.empty() || scene_->empty()) return;
  // Index the particles with cells sized to a typical sphere so each query stays local.
  double typical = 0.0;
  for (const Gaussian& g : scene_->gaussians) typical += multiplier_ * g.radius();
  typical = std::max(typical / static_cast<double>(scene_->size()), 1e-6);
  Aabb box = Aabb::empty();
  for (const Vec3& p : snapshot.positions) box.expand(p);
  const NeighborGrid grid(snapshot.positions, typical, box);

  const long ng = static_cast<long>(scene_->size());
#pragma omp parallel
  {
    std::vector<int> hits;
#pragma omp for schedule(dynamic, 16)
    for (long g = 0; g < ng; ++g) {
      const Gaussian& gauss = scene_->gaussians[g];
      hits.clear();
      grid.for_each_within(gauss.center, multiplier_ * gauss.radius(), [&](int i) { hits.push_back(i); });
      if (hits.empty()) continue;
      std::sort(hits.begin(), hits.end());
      double s = 0.0;
      for (int i : hits) s += snapshot.divergence[i];
      sums_[g] += s;
      events_[g] += static_cast<long>(hits.size());
      auto& m = members_[g];
      const std::size_t old = m.size();
      m.insert(m.end(), hits.begin(), hits.end());
      std::inplace_merge(m.begin(), m.begin() + static_cast<long>(old), m.end());
      m.erase(std::unique(m.begin(), m.end()), m.end());
    }
  }
}

GaussianAggregate GaussianAggregator::finish() {
  GaussianAggregate out;
  const std::size_t n = scene_->size();
  out.mean_divergence.assign(n, 0.0);
  out.counts.assign(n, 0);
  out.events = events_;
  for (std::size_t g = 0; g < n; ++g) {
    if (events_[g] > 0) out.mean_divergence[g] = sums_[g] / static_cast<double>(events_[g]);
    out.counts[g] = static_cast<long>(members_[g].size());
  }
  return out;
}

GaussianAggregate aggregate_per_gaussian(const RolloutTrace& trace, const GaussianScene& scene, double multiplier) {
  GaussianAggregator agg(scene, multiplier);
  for (const Snapshot& s : trace.snapshots) agg.add(s);
  return agg.finish();
}

std::vector<double> reduce_over_ics(std::span<const std::vector<double>> per_ic) {
  if (per_ic.empty()) throw InputError("reduce_over_ics: no initial conditions");
  std::vector<double> out = per_ic.front();
  for (const auto& v : per_ic.subspan(1)) {
    if (v.size() != out.size()) throw InputError("reduce_over_ics: array length mismatch");
    for (std::size_t g = 0; g < out.size(); ++g) out[g] = std::max(out[g], v[g]);
  }
  return out;
}

double geometry_divergence(const GaussianScene& scene, std::span<const double> scores) {
  if (scene.empty()) throw InputError("geometry_divergence: empty scene");
  if (scores.size() != scene.size()) throw InputError("geometry_divergence: score count does not match scene size");
  double sum = 0.0;
  for (std::size_t g = 0; g < scene.size(); ++g) {
    const double s = scene.gaussians[g].trace();
    sum += std::numbers::pi * s * s * scores[g];
  }
  return sum / static_cast<double>(scene.size());
}

}  // namespace fluidprobe
