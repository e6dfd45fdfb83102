#include "fluidprobe/neighbor_grid.hpp"

#include <algorithm>
#include <string>

namespace fluidprobe {

namespace {
// Upper bound on cells per axis; very large domains fall back to coarser cells.
constexpr int kMaxDim = 1024;
}

NeighborGrid::NeighborGrid(std::span<const Vec3> positions, double cutoff, const Aabb& bounds)
    : positions_(positions.begin(), positions.end()), cutoff_(cutoff), cell_size_(cutoff), bounds_(bounds) {
  if (!std::isfinite(cutoff) || cutoff <= 0.0) throw InputError("neighbor cutoff must be positive");
  for (const Vec3& p : positions_)
    if (!p.allFinite()) throw InputError("neighbor grid: non-finite particle position");
  if (bounds_.is_empty()) {
    bounds_ = Aabb::empty();
    for (const Vec3& p : positions_) bounds_.expand(p);
    if (bounds_.is_empty()) bounds_ = Aabb{};
  }
  const Vec3 ext = bounds_.extent();
  double largest = ext.maxCoeff();
  if (largest / cell_size_ > kMaxDim) cell_size_ = largest / kMaxDim;
  for (int a = 0; a < 3; ++a)
    dims_[a] = std::max(1, static_cast<int>(std::floor(ext[a] / cell_size_)) + 1);

  const std::size_t ncell = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::size_t> cell_of_particle(positions_.size());
  cell_start_.assign(ncell + 1, 0);
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    const auto c = cell_of(positions_[i]);
    cell_of_particle[i] = linear(c[0], c[1], c[2]);
    ++cell_start_[cell_of_particle[i] + 1];
  }
  for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
  // Counting sort keeps ascending index order inside each bucket.
  sorted_.resize(positions_.size());
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < positions_.size(); ++i)
    sorted_[fill[cell_of_particle[i]]++] = static_cast<int>(i);
}

void NeighborGrid::collect(int i, std::vector<int>& out) const {
  out.clear();
  const Vec3& p = positions_[i];
  const auto c = cell_of(p);
  const double r2 = cutoff_ * cutoff_;
  const int reach = cell_size_ >= cutoff_ ? 1 : static_cast<int>(std::ceil(cutoff_ / cell_size_));
  for (int z = std::max(0, c[2] - reach); z <= std::min(dims_[2] - 1, c[2] + reach); ++z)
    for (int y = std::max(0, c[1] - reach); y <= std::min(dims_[1] - 1, c[1] + reach); ++y)
      for (int x = std::max(0, c[0] - reach); x <= std::min(dims_[0] - 1, c[0] + reach); ++x) {
        const std::size_t cell = linear(x, y, z);
        for (std::size_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
          const int j = sorted_[k];
          if (j != i && (positions_[j] - p).squaredNorm() <= r2) out.push_back(j);
        }
      }
  std::sort(out.begin(), out.end());
}

std::vector<int> NeighborGrid::neighbors(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= positions_.size())
    throw InputError("neighbor query index " + std::to_string(i) + " out of range");
  std::vector<int> out;
  collect(i, out);
  return out;
}

NeighborList NeighborGrid::all_neighbors() const {
  const std::size_t n = positions_.size();
  std::vector<std::vector<int>> lists(n);
#pragma omp parallel
  {
    std::vector<int> scratch;
#pragma omp for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) {
      collect(static_cast<int>(i), scratch);
      lists[i] = scratch;
    }
  }
  NeighborList out;
  out.offsets.resize(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) out.offsets[i + 1] = out.offsets[i] + lists[i].size();
  out.indices.resize(out.offsets[n]);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(lists[i].begin(), lists[i].end(), out.indices.begin() + out.offsets[i]);
  return out;
}

std::vector<int> brute_force_neighbors(std::span<const Vec3> positions, int i, double cutoff) {
  std::vector<int> out;
  const double r2 = cutoff * cutoff;
  for (std::size_t j = 0; j < positions.size(); ++j)
    if (static_cast<int>(j) != i && (positions[j] - positions[i]).squaredNorm() <= r2)
      out.push_back(static_cast<int>(j));
  return out;
}

}  // namespace fluidprobe
