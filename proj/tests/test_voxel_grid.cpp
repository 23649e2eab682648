#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace dualdrm;
using namespace dualdrm::testing;

TEST_CASE("voxel_of") {
  const VoxelGrid grid = paper_grid();

  SUBCASE("min corner maps to id 0") {
    CHECK(grid.voxel_of(grid.min_corner) == VoxelId(0));
  }
  SUBCASE("hand-computed interior cell") {
    // (0,0,0.03): ix = iy = floor(1.05/0.06) = 17, iz = 0 -> 17 + 35*17 = 612
    CHECK(grid.voxel_of(Vec3(0, 0, 0.03)) == VoxelId(612));
  }
  SUBCASE("points at or past the upper boundary are out of bounds") {
    const Vec3 max = grid.min_corner +
                     grid.voxel_size * Vec3(grid.dims[0], grid.dims[1], grid.dims[2]);
    CHECK_FALSE(grid.voxel_of(max).has_value());
    CHECK_FALSE(grid.voxel_of(max + Vec3(1e-6, 0, 0)).has_value());
    CHECK(grid.voxel_of(max - Vec3(1e-9, 1e-9, 1e-9)).has_value());
  }
  SUBCASE("id layout is x-fastest") {
    CHECK(grid.id_of(1, 0, 0) == 1);
    CHECK(grid.id_of(0, 1, 0) == 35);
    CHECK(grid.id_of(0, 0, 1) == 35 * 35);
  }
}

TEST_CASE("occupancy_from_points") {
  const VoxelGrid grid = paper_grid();

  SUBCASE("empty input") {
    const auto r = occupancy_from_points(grid, {});
    CHECK(r.occupancy.count() == 0);
    CHECK(r.dropped == 0);
  }
  SUBCASE("two points in one voxel yield a single id") {
    const auto r = occupancy_from_points(
        grid, {Vec3(0.01, 0.01, 0.01), Vec3(0.02, 0.02, 0.02)});
    CHECK(r.occupancy.count() == 1);
  }
  SUBCASE("out-of-bounds points are dropped and counted") {
    const auto r = occupancy_from_points(grid, {Vec3(0, 0, 0.03), Vec3(99, 0, 0)});
    CHECK(r.occupancy.count() == 1);
    CHECK(r.dropped == 1);
  }
  SUBCASE("1000 random points match the per-point floor computation") {
    TestRng rng(13);
    std::vector<Vec3> pts;
    std::vector<VoxelId> expect;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 p(rng.uniform(-1.05, 1.05), rng.uniform(-1.05, 1.05),
                   rng.uniform(0.0, 1.9));
      pts.push_back(p);
      const auto ix = static_cast<std::uint32_t>(
          std::floor((p.x() - grid.min_corner.x()) / grid.voxel_size));
      const auto iy = static_cast<std::uint32_t>(
          std::floor((p.y() - grid.min_corner.y()) / grid.voxel_size));
      const auto iz = static_cast<std::uint32_t>(
          std::floor((p.z() - grid.min_corner.z()) / grid.voxel_size));
      expect.push_back(ix + 35 * (iy + 35 * iz));
    }
    std::sort(expect.begin(), expect.end());
    expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
    const auto r = occupancy_from_points(grid, pts);
    CHECK(r.dropped == 0);
    CHECK(r.occupancy.active_ids() == expect);
  }
  SUBCASE("insertion order does not matter and repeats are idempotent") {
    std::vector<Vec3> pts = {Vec3(0, 0, 0.03), Vec3(0.5, -0.3, 1.0),
                             Vec3(-0.9, 0.9, 0.5)};
    auto fwd = occupancy_from_points(grid, pts);
    std::reverse(pts.begin(), pts.end());
    pts.insert(pts.end(), pts.begin(), pts.end());
    auto rev = occupancy_from_points(grid, pts);
    CHECK(fwd.occupancy.active_ids() == rev.occupancy.active_ids());
  }
}

TEST_CASE("circumscribing spheres") {
  const VoxelGrid grid = paper_grid();

  SUBCASE("id 0 center and radius") {
    const Sphere s = grid.circumscribing_sphere(0);
    CHECK(s.center.isApprox(Vec3(-1.02, -1.02, 0.03), 1e-12));
    CHECK(s.radius == doctest::Approx(0.06 * std::sqrt(3.0) / 2).epsilon(1e-12));
  }
  SUBCASE("radius identical for every id") {
    CHECK(grid.circumscribing_sphere(0).radius ==
          grid.circumscribing_sphere(static_cast<VoxelId>(grid.total_voxels() - 1)).radius);
  }
  SUBCASE("last id center is the max corner minus half a voxel per axis") {
    const Vec3 max = grid.min_corner +
                     grid.voxel_size * Vec3(grid.dims[0], grid.dims[1], grid.dims[2]);
    const Sphere s =
        grid.circumscribing_sphere(static_cast<VoxelId>(grid.total_voxels() - 1));
    CHECK(s.center.isApprox(max - Vec3::Constant(grid.voxel_size / 2), 1e-12));
  }
  SUBCASE("invalid id is an input error") {
    CHECK_THROWS_AS(grid.circumscribing_sphere(
                        static_cast<VoxelId>(grid.total_voxels())),
                    InputError);
  }
  SUBCASE("voxel_of of every center round-trips to the same id") {
    for (std::uint64_t id = 0; id < grid.total_voxels(); id += 7) {
      CHECK(grid.voxel_of(grid.voxel_center(static_cast<VoxelId>(id))) ==
            static_cast<VoxelId>(id));
    }
  }
}

TEST_CASE("grid validation and hashing") {
  CHECK_THROWS_AS(VoxelGrid(Vec3::Zero(), 0.0, {1, 1, 1}), InputError);
  CHECK_THROWS_AS(VoxelGrid(Vec3::Zero(), 0.1, {0, 1, 1}), InputError);
  CHECK(paper_grid().spec_hash() == paper_grid().spec_hash());
  CHECK(paper_grid().spec_hash() != small_grid().spec_hash());
}
