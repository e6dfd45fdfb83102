#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/neighbor_grid.hpp"

#include <random>

using namespace fluidprobe;

namespace {

std::vector<int> scan(const std::vector<Vec3>& p, int i, double h) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(p.size()); ++j)
    if (j != i && (p[i] - p[j]).norm() <= h) out.push_back(j);
  return out;
}

std::vector<Vec3> random_points(std::size_t n, double side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Vec3> p(n);
  for (auto& x : p) x = Vec3(u(rng), u(rng), u(rng));
  return p;
}

}  // namespace

TEST_CASE("empty input gives an empty grid") {
  std::vector<Vec3> none;
  NeighborGrid g(none, 0.1, Aabb{Vec3::Zero(), Vec3::Ones()});
  CHECK(g.size() == 0);
  for (std::size_t c = 0; c < g.cell_count(); ++c) CHECK(g.bucket(c).empty());
  CHECK(g.all_neighbors().size() == 0);
}

TEST_CASE("close pair are mutual neighbors") {
  std::vector<Vec3> p{Vec3(0.5, 0.5, 0.5), Vec3(0.55, 0.5, 0.5)};
  NeighborGrid g(p, 0.1, Aabb{Vec3::Zero(), Vec3::Ones()});
  CHECK(g.neighbors(0) == std::vector<int>{1});
  CHECK(g.neighbors(1) == std::vector<int>{0});
}

TEST_CASE("pair at exactly the cutoff are neighbors") {
  std::vector<Vec3> p{Vec3(0.25, 0.5, 0.5), Vec3(0.5, 0.5, 0.5)};
  NeighborGrid g(p, 0.25, Aabb{Vec3::Zero(), Vec3::Ones()});
  CHECK(g.neighbors(0) == std::vector<int>{1});
  CHECK(g.neighbors(1) == std::vector<int>{0});
}

TEST_CASE("isolated particle has no neighbors") {
  std::vector<Vec3> p{Vec3(0.1, 0.1, 0.1), Vec3(0.9, 0.9, 0.9)};
  NeighborGrid g(p, 0.1, Aabb{Vec3::Zero(), Vec3::Ones()});
  CHECK(g.neighbors(0).empty());
}

TEST_CASE("bad index throws") {
  std::vector<Vec3> p{Vec3::Zero()};
  NeighborGrid g(p, 0.1, Aabb{});
  CHECK_THROWS(g.neighbors(1));
  CHECK_THROWS(g.neighbors(-1));
}

TEST_CASE("1000 random points match the pairwise scan") {
  const auto p = random_points(1000, 1.0, 5);
  NeighborGrid g(p, 0.1, Aabb{Vec3::Zero(), Vec3::Ones()});
  const NeighborList all = g.all_neighbors();
  for (int i = 0; i < 1000; ++i) {
    const auto want = scan(p, i, 0.1);
    CHECK(g.neighbors(i) == want);
    const auto got = all.of(i);
    CHECK(std::vector<int>(got.begin(), got.end()) == want);
  }
}

TEST_CASE("points outside the bounds are still found") {
  auto p = random_points(300, 1.0, 9);
  p.push_back(Vec3(1.05, 0.5, 0.5));
  p.push_back(Vec3(-0.2, -0.2, -0.2));
  NeighborGrid g(p, 0.15, Aabb{Vec3::Zero(), Vec3::Ones()});
  for (int i = 0; i < static_cast<int>(p.size()); ++i) CHECK(g.neighbors(i) == scan(p, i, 0.15));
}

TEST_CASE("neighbor relation is symmetric") {
  const auto p = random_points(500, 0.5, 21);
  NeighborGrid g(p, 0.08, Aabb{});
  const NeighborList all = g.all_neighbors();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (int j : all.of(i)) {
      const auto back = all.of(j);
      CHECK(std::find(back.begin(), back.end(), static_cast<int>(i)) != back.end());
    }
}
