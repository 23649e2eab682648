#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dualdrm/dual_roadmap.hpp"
#include "support.hpp"

using namespace dualdrm;
using namespace dualdrm::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

DualRoadmap small_dual(const RobotModel& m, double padding = 0.03) {
  const std::vector<JointGrid> torso = {JointGrid(-kPi / 4, kPi / 4, kPi / 4)};
  const std::vector<JointGrid> arm = {JointGrid(-kPi / 2, kPi / 2, kPi / 4),
                                      JointGrid(-kPi, kPi, kPi / 2)};
  return build_dual(m, torso, arm, arm, small_grid(), padding);
}

}  // namespace

TEST_CASE("torso support equality holds by construction") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = small_dual(m);
  CHECK(dual.torso_support_equal());
  CHECK(dual.r1.torso.values == dual.r2.torso.values);  // bit-exact sequences
  REQUIRE(dual.r1.torso.size() == dual.r2.torso.size());
}

TEST_CASE("inter maps: exhaustive pair oracle on a small dual roadmap") {
  const RobotModel m = mini_dual(1, 2);
  const double padding = 0.03;
  const DualRoadmap dual = small_dual(m, padding);

  std::uint64_t oracle_pairs = 0;
  for (std::uint32_t t = 0; t < dual.torso_count(); ++t) {
    const auto [a0, a1] = dual.r1.torso_node_range(t);
    const auto [b0, b1] = dual.r2.torso_node_range(t);
    for (NodeId a = a0; a < a1; ++a) {
      for (NodeId b = b0; b < b1; ++b) {
        const FullConfig q = compose(dual, {a, b});
        const bool want = inter_arm_collision(m, q, padding);
        CHECK(dual.inter_contains({a, b}) == want);
        if (want) ++oracle_pairs;
      }
    }
  }
  CHECK(oracle_pairs == dual.inter_pair_count());
  CHECK(oracle_pairs > 0);  // geometry must make the maps non-trivial
}

TEST_CASE("arms mounted far apart produce empty inter maps") {
  RobotModel m = mini_dual(1, 1);
  m.arm1_mount.translation() = Vec3(0, 0.6, 0.2);
  m.arm2_mount.translation() = Vec3(0, -0.6, 0.2);
  m.finalize();
  const std::vector<JointGrid> torso = {JointGrid(0, 0, kPi / 6)};
  const std::vector<JointGrid> arm = {JointGrid(-kPi / 2, kPi / 2, kPi / 4)};
  const DualRoadmap dual = build_dual(m, torso, arm, arm, small_grid(), 0.0);
  CHECK(dual.inter_pair_count() == 0);
}

TEST_CASE("inter maps are mutual transposes") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = small_dual(m);
  std::set<std::pair<NodeId, NodeId>> fwd, rev;
  for (NodeId a = 0; a < dual.r1.node_count(); ++a) {
    for (NodeId b : dual.inter_of_r1(a)) fwd.insert({a, b});
  }
  for (NodeId b = 0; b < dual.r2.node_count(); ++b) {
    for (NodeId a : dual.inter_of_r2(b)) rev.insert({a, b});
  }
  CHECK(fwd == rev);
  // symmetric robot: row sums match across directions
  CHECK(dual.inter1.size() == dual.inter2.size());
}

TEST_CASE("pair_in_collision") {
  const RobotModel m = mini_dual(1, 2);
  const double padding = 0.03;
  const DualRoadmap dual = small_dual(m, padding);
  ValidityMask mask1(dual.r1.node_count());
  ValidityMask mask2(dual.r2.node_count());

  SUBCASE("valid non-inter pair is free") {
    for (std::uint32_t t = 0; t < dual.torso_count(); ++t) {
      const auto [a0, a1] = dual.r1.torso_node_range(t);
      const auto [b0, b1] = dual.r2.torso_node_range(t);
      for (NodeId a = a0; a < a1; ++a) {
        for (NodeId b = b0; b < b1; ++b) {
          if (!dual.inter_contains({a, b})) {
            CHECK_FALSE(pair_in_collision(dual, mask1, mask2, {a, b}));
          }
        }
      }
    }
  }
  SUBCASE("inter-map pairs collide regardless of masks") {
    REQUIRE(dual.inter_pair_count() > 0);
    for (NodeId a = 0; a < dual.r1.node_count(); ++a) {
      for (NodeId b : dual.inter_of_r1(a)) {
        CHECK(pair_in_collision(dual, mask1, mask2, {a, b}));
      }
    }
  }
  SUBCASE("masked nodes collide") {
    const NodeId a = 0;
    const auto [b0, b1] = dual.r2.torso_node_range(dual.r1.torso_of[a]);
    REQUIRE(b0 < b1);
    ValidityMask bad1(dual.r1.node_count());
    bad1.invalidate(a);
    CHECK(pair_in_collision(dual, bad1, mask2, {a, b0}));
  }
  SUBCASE("torso mismatch is a contract error") {
    // find nodes with different torso indices
    NodeId a = 0;
    NodeId b = dual.r2.node_count() - 1;
    REQUIRE(dual.r1.torso_of[a] != dual.r2.torso_of[b]);
    CHECK_THROWS_AS(pair_in_collision(dual, mask1, mask2, {a, b}), ContractError);
  }
}

TEST_CASE("proposition-style equivalence: pair collision vs dense oracle") {
  // 1000 random pairs compared bit-for-bit against config_collision at the
  // stored padding under a random occupancy.
  const RobotModel m = mini_dual(1, 2);
  const double padding = 0.03;
  const DualRoadmap dual = small_dual(m, padding);
  const VoxelGrid& grid = dual.r1.meta.grid;

  // voxels near the torso column invalidate every node at once; sample the
  // arm workspace annulus so the sweep sees both verdicts
  TestRng rng(53);
  OccupancySet occ(grid);
  int placed = 0;
  while (placed < 30) {
    const auto id = static_cast<VoxelId>(rng.below(grid.total_voxels()));
    const Vec3 c = grid.voxel_center(id);
    if (c.head<2>().norm() < 0.3) continue;
    occ.insert(id);
    ++placed;
  }
  const ValidityMask mask1 = build_collision_set(dual.r1, occ);
  const ValidityMask mask2 = build_collision_set(dual.r2, occ);

  int checked = 0, colliding = 0;
  while (checked < 1000) {
    const auto t = static_cast<std::uint32_t>(rng.below(dual.torso_count()));
    const auto [a0, a1] = dual.r1.torso_node_range(t);
    const auto [b0, b1] = dual.r2.torso_node_range(t);
    if (a0 == a1 || b0 == b1) continue;
    const NodePair p{a0 + static_cast<NodeId>(rng.below(a1 - a0)),
                     b0 + static_cast<NodeId>(rng.below(b1 - b0))};
    const bool fast = pair_in_collision(dual, mask1, mask2, p);
    const bool dense = config_collision(m, compose(dual, p), grid, occ, padding);
    CHECK(fast == dense);
    colliding += fast;
    ++checked;
  }
  CHECK(colliding > 0);
  CHECK(colliding < checked);
}

TEST_CASE("compose and project round trips") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = small_dual(m);

  SUBCASE("compose then project is the identity on pairs") {
    TestRng rng(59);
    for (int trial = 0; trial < 50; ++trial) {
      const auto t = static_cast<std::uint32_t>(rng.below(dual.torso_count()));
      const auto [a0, a1] = dual.r1.torso_node_range(t);
      const auto [b0, b1] = dual.r2.torso_node_range(t);
      if (a0 == a1 || b0 == b1) continue;
      const NodePair p{a0 + static_cast<NodeId>(rng.below(a1 - a0)),
                       b0 + static_cast<NodeId>(rng.below(b1 - b0))};
      const FullConfig q = compose(dual, p);
      const auto [c1, c2] = project(q);
      CHECK(c1.torso == q.torso);
      CHECK(c2.torso == q.torso);
      CHECK(c1.arm == q.arm1);
      CHECK(c2.arm == q.arm2);
      // the torso values are bit-exact grid entries
      const auto trow = dual.r1.torso.row(t);
      for (std::uint32_t j = 0; j < dual.r1.torso_dof(); ++j) {
        CHECK(q.torso[j] == trow[j]);
      }
    }
  }
  SUBCASE("project of an off-grid config shares the exact torso values") {
    TestRng rng(61);
    const FullConfig q = random_config(m, rng);
    const auto [c1, c2] = project(q);
    CHECK(c1.torso == c2.torso);
  }
  SUBCASE("compose rejects torso mismatches") {
    NodeId a = 0;
    NodeId b = dual.r2.node_count() - 1;
    REQUIRE(dual.r1.torso_of[a] != dual.r2.torso_of[b]);
    CHECK_THROWS_AS(compose(dual, {a, b}), ContractError);
  }
}

TEST_CASE("pair enumeration budget") {
  const RobotModel m = mini_dual(1, 2);
  DualBuildLimits limits;
  limits.pair_budget = 10;
  const std::vector<JointGrid> torso = {JointGrid(-kPi / 4, kPi / 4, kPi / 4)};
  const std::vector<JointGrid> arm = {JointGrid(-kPi / 2, kPi / 2, kPi / 4),
                                      JointGrid(-kPi, kPi, kPi / 2)};
  CHECK_THROWS_AS(build_dual(m, torso, arm, arm, small_grid(), 0.0, {}, limits),
                  CapacityError);
}
