#pragma once

#include "fluidprobe/neighbor_grid.hpp"
#include "fluidprobe/scene.hpp"
#include "fluidprobe/sph.hpp"

#include <span>
#include <vector>

namespace fluidprobe {

/// D_i = |sum_j V_j (v_j - v_i) . grad W(x_i - x_j)| for fluid particles, 0 for
/// rigid ones. V_j is the fluid rest volume (m / rho_0) or the boundary
/// pseudo-volume.
std::vector<double> particle_divergence(const ParticleSystem& sys, const NeighborList& neighbors, double kernel_radius);
std::vector<double> particle_divergence(const ParticleSystem& sys, const NeighborGrid& grid, double kernel_radius);

/// Per-Gaussian statistics for one initial condition.
struct GaussianAggregate {
  std::vector<double> mean_divergence;  // D_g^(IC)
  std::vector<long> counts;             // |P_g^(IC)|, distinct particles
  std::vector<long> events;             // (snapshot, particle) membership pairs
};

/// Streams snapshots into per-Gaussian membership statistics. A particle is a
/// member of Gaussian g in a snapshot when |x_i - mu_g| <= n r_g.
class GaussianAggregator {
 public:
  GaussianAggregator(const GaussianScene& scene, double multiplier);

  void add(const Snapshot& snapshot);
  GaussianAggregate finish();

 private:
  const GaussianScene* scene_;
  double multiplier_;
  double max_radius_ = 0.0;
  std::vector<double> sums_;
  std::vector<long> events_;
  std::vector<std::vector<int>> members_;
};

GaussianAggregate aggregate_per_gaussian(const RolloutTrace& trace, const GaussianScene& scene, double multiplier);

/// Elementwise maximum over per-IC score arrays.
std::vector<double> reduce_over_ics(std::span<const std::vector<double>> per_ic);

/// (1/|G|) sum_g pi s_g^2 D_g with s_g = tr(Sigma_g).
double geometry_divergence(const GaussianScene& scene, std::span<const double> scores);

}  // namespace fluidprobe
