#pragma once

#include "fluidprobe/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace fluidprobe {

/// Compressed per-particle neighbor lists (CSR layout).
struct NeighborList {
  std::vector<std::size_t> offsets;  // size n + 1
  std::vector<int> indices;

  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const int> of(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

/// Uniform-grid spatial index with cell size equal to the query cutoff.
///
/// Positions are copied at build time. Points outside `bounds` are clamped into
/// the nearest boundary cell, so they are still found by queries. Within a cell,
/// indices are stored in ascending order.
class NeighborGrid {
 public:
  NeighborGrid() = default;
  NeighborGrid(std::span<const Vec3> positions, double cutoff, const Aabb& bounds);

  std::size_t size() const { return positions_.size(); }
  double cutoff() const { return cutoff_; }
  const Aabb& bounds() const { return bounds_; }
  std::array<int, 3> dims() const { return dims_; }
  std::size_t cell_count() const { return cell_start_.empty() ? 0 : cell_start_.size() - 1; }
  std::span<const int> bucket(std::size_t cell) const {
    return {sorted_.data() + cell_start_[cell], cell_start_[cell + 1] - cell_start_[cell]};
  }

  /// { j : |x_i - x_j| <= cutoff, j != i }, ascending. Throws on bad index.
  std::vector<int> neighbors(int i) const;

  /// Neighbor lists for every particle, built in one pass.
  NeighborList all_neighbors() const;

  /// Calls fn(j) for every indexed point with |x_j - p| <= radius. Order is by
  /// cell, ascending within a cell; callers needing a global order must sort.
  template <typename Fn>
  void for_each_within(const Vec3& p, double radius, Fn&& fn) const {
    if (positions_.empty()) return;
    const int reach = std::max(1, static_cast<int>(std::ceil(radius / cell_size_)));
    const auto c = cell_of(p);
    const double r2 = radius * radius;
    for (int z = std::max(0, c[2] - reach); z <= std::min(dims_[2] - 1, c[2] + reach); ++z)
      for (int y = std::max(0, c[1] - reach); y <= std::min(dims_[1] - 1, c[1] + reach); ++y)
        for (int x = std::max(0, c[0] - reach); x <= std::min(dims_[0] - 1, c[0] + reach); ++x) {
          const std::size_t cell = linear(x, y, z);
          for (std::size_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
            const int j = sorted_[k];
            if ((positions_[j] - p).squaredNorm() <= r2) fn(j);
          }
        }
  }

 private:
  std::array<int, 3> cell_of(const Vec3& p) const {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double t = std::floor((p[a] - bounds_.min[a]) / cell_size_);
      c[a] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(dims_[a] - 1)));
    }
    return c;
  }
  std::size_t linear(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
  }
  void collect(int i, std::vector<int>& out) const;

  std::vector<Vec3> positions_;
  double cutoff_ = 0.0;
  double cell_size_ = 1.0;
  Aabb bounds_{};
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::size_t> cell_start_;
  std::vector<int> sorted_;
};

/// Reference O(N^2) neighbor search; used as a test oracle.
std::vector<int> brute_force_neighbors(std::span<const Vec3> positions, int i, double cutoff);

}  // namespace fluidprobe
