#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dualdrm/baselines.hpp"
#include "dualdrm/planner.hpp"
#include "support.hpp"

using namespace dualdrm;
using namespace dualdrm::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

DualRoadmap medium_dual(const RobotModel& m) {
  const std::vector<JointGrid> torso = {JointGrid(-kPi / 4, kPi / 4, kPi / 4)};
  const std::vector<JointGrid> arm = {JointGrid(-kPi / 2, kPi / 2, kPi / 4),
                                      JointGrid(-kPi, kPi, kPi / 2)};
  return build_dual(m, torso, arm, arm, small_grid(), 0.03);
}

FullConfig home(const RobotModel&) {
  FullConfig q;
  q.torso = VecX::Zero(1);
  q.arm1 = VecX::Zero(2);
  q.arm2 = VecX::Zero(2);
  return q;
}

OccupancySet tip_obstacle(const RobotModel& m, const VoxelGrid& grid,
                          const VecX& torso, const VecX& arm2_pose,
                          double spread = 0.04) {
  OccupancySet occ(grid);
  CollisionKernel kernel(m, 0.0);
  kernel.set_torso(torso);
  kernel.set_arm(ChainId::arm2, arm2_pose);
  for (const Vec3& c : kernel.arm_centers(ChainId::arm2)) {
    for (double dx : {-spread, 0.0, spread}) {
      for (double dy : {-spread, 0.0, spread}) {
        for (double dz : {-spread, 0.0, spread}) {
          if (auto id = grid.voxel_of(c + Vec3(dx, dy, dz))) occ.insert(*id);
        }
      }
    }
  }
  return occ;
}

}  // namespace

TEST_CASE("start equal to target on a composed grid pair: single waypoint, cost 0") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  ValidityMask m1(dual.r1.node_count()), m2(dual.r2.node_count());
  TestRng rng(7);
  const auto pair = sample_valid_pair(dual, m1, m2, rng);
  REQUIRE(pair.has_value());

  PlanRequest request;
  request.occupancy = OccupancySet(dual.r1.meta.grid);
  request.start = compose(dual, *pair);
  request.target = request.start;
  const PlanResult r = plan(dual, m, request);
  REQUIRE(r.ok());
  CHECK(r.trajectory->waypoints.size() == 1);
  CHECK(r.trajectory->cost == 0.0);
}

TEST_CASE("free-space plan: verified, endpoint-exact, metric lower bound") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  const VoxelGrid& grid = dual.r1.meta.grid;

  PlanRequest request;
  request.occupancy = OccupancySet(grid);
  request.start = home(m);
  request.target = home(m);
  request.target.arm1 = VecX(2);
  request.target.arm1 << -kPi / 2, 0.0;  // raise arm1

  const PlanResult r = plan(dual, m, request);
  REQUIRE(r.ok());
  const auto& wp = r.trajectory->waypoints;
  CHECK(wp.front().torso == request.start.torso);
  CHECK(wp.front().arm1 == request.start.arm1);
  CHECK(wp.front().arm2 == request.start.arm2);
  CHECK(wp.back().arm1 == request.target.arm1);
  CHECK(validate_trajectory(m, wp, grid, request.occupancy, request.options.resolution).ok);
  CHECK(r.trajectory->cost >=
        full_distance(dual, request.start, request.target) - 1e-9);
}

TEST_CASE("off-grid endpoints half a step away connect and stay exact") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);

  PlanRequest request;
  request.occupancy = OccupancySet(dual.r1.meta.grid);
  request.start = home(m);
  request.start.torso[0] = kPi / 8;  // half of the pi/4 torso step
  request.start.arm1[0] = kPi / 8;
  request.target = home(m);
  request.target.arm2[0] = -kPi / 2 + kPi / 8;

  const PlanResult r = plan(dual, m, request);
  REQUIRE(r.ok());
  CHECK(r.trajectory->waypoints.front().torso == request.start.torso);
  CHECK(r.trajectory->waypoints.front().arm1 == request.start.arm1);
  CHECK(r.trajectory->waypoints.back().arm2 == request.target.arm2);
}

TEST_CASE("an obstacle on arm2's straight route forces a verified detour") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  const VoxelGrid& grid = dual.r1.meta.grid;

  // obstacle at the halfway pose of arm2's straight-line joint interpolation
  VecX mid(2);
  mid << -kPi / 4, -kPi / 2;
  const OccupancySet occ = tip_obstacle(m, grid, VecX::Zero(1), mid);

  PlanRequest request;
  request.occupancy = occ;
  request.start = home(m);
  request.target = home(m);
  request.target.arm2 = VecX(2);
  request.target.arm2 << -kPi / 2, -kPi;

  const PlanResult r = plan(dual, m, request);
  const PlanRequest oracle_request{request.start, request.target, occ, [] {
                                     PlanOptions o;
                                     o.backend = SearchBackend::product_oracle;
                                     return o;
                                   }()};
  const PlanResult oracle = plan(dual, m, oracle_request);
  CHECK(r.ok() == oracle.ok());
  if (r.ok()) {
    CHECK(validate_trajectory(m, r.trajectory->waypoints, grid, occ,
                              request.options.resolution)
              .ok);
  }
}

TEST_CASE("plan-level feasibility agrees with the product-oracle backend") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  const VoxelGrid& grid = dual.r1.meta.grid;
  TestRng rng(41);

  int solved = 0;
  for (int trial = 0; trial < 25; ++trial) {
    auto inst = random_search_instance(dual, rng, 15, 0);
    if (!inst) continue;
    PlanRequest request;
    request.occupancy = inst->occupancy;
    request.start = compose(dual, inst->start);
    request.target = compose(dual, inst->target);
    if (config_collision(m, request.start, grid, inst->occupancy) ||
        config_collision(m, request.target, grid, inst->occupancy)) {
      continue;
    }
    const PlanResult r = plan(dual, m, request);
    PlanRequest oracle_request = request;
    oracle_request.options.backend = SearchBackend::product_oracle;
    const PlanResult oracle = plan(dual, m, oracle_request);
    CHECK(r.ok() == oracle.ok());
    if (r.ok()) {
      ++solved;
      CHECK(validate_trajectory(m, r.trajectory->waypoints, grid, inst->occupancy,
                                request.options.resolution)
                .ok);
    }
  }
  CHECK(solved > 5);
}

TEST_CASE("failure taxonomy") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  const VoxelGrid& grid = dual.r1.meta.grid;

  SUBCASE("start in collision") {
    PlanRequest request;
    request.occupancy = OccupancySet(grid);
    request.start = home(m);
    request.start.arm1 = VecX(2);
    request.start.arm1 << 0.0, -kPi / 2;
    request.start.arm2 = VecX(2);
    request.start.arm2 << 0.0, kPi / 2;  // arms crossed
    request.target = home(m);
    CHECK(plan(dual, m, request).status == PlanStatus::start_in_collision);
  }
  SUBCASE("target in collision") {
    PlanRequest request;
    request.occupancy = OccupancySet(grid);
    request.start = home(m);
    request.target = home(m);
    request.target.arm1 = VecX(2);
    request.target.arm1 << 0.0, -kPi / 2;
    request.target.arm2 = VecX(2);
    request.target.arm2 << 0.0, kPi / 2;
    CHECK(plan(dual, m, request).status == PlanStatus::target_in_collision);
  }
  SUBCASE("walled-off target: typed unreachability") {
    // single-torso roadmap so the torso cannot route around the cut
    const std::vector<JointGrid> torso = {JointGrid(0, 0, kPi / 6)};
    const std::vector<JointGrid> arm = {JointGrid(-kPi / 2, kPi / 2, kPi / 6),
                                        JointGrid(0, 0, kPi / 6)};
    const DualRoadmap pinned = build_dual(m, torso, arm, arm, small_grid(), 0.03);
    // wall across arm1's swing arc at pitch -pi/4
    VecX wall_pose(2);
    wall_pose << -kPi / 4, 0.0;
    OccupancySet occ(small_grid());
    {
      CollisionKernel kernel(m, 0.0);
      kernel.set_torso(VecX::Zero(1));
      kernel.set_arm(ChainId::arm1, wall_pose);
      for (const Vec3& c : kernel.arm_centers(ChainId::arm1)) {
        for (double dy : {-0.05, 0.0, 0.05}) {
          for (double dz : {-0.05, 0.0, 0.05}) {
            if (auto id = small_grid().voxel_of(c + Vec3(0, dy, dz))) occ.insert(*id);
            if (auto id = small_grid().voxel_of(c + Vec3(0.05, dy, dz))) occ.insert(*id);
            if (auto id = small_grid().voxel_of(c + Vec3(-0.05, dy, dz))) occ.insert(*id);
          }
        }
      }
    }
    PlanRequest request;
    request.occupancy = occ;
    request.start = home(m);
    request.target = home(m);
    request.target.arm1 = VecX(2);
    request.target.arm1 << -kPi / 2, 0.0;  // beyond the wall
    const PlanResult r = plan(pinned, m, request);
    CHECK_FALSE(r.ok());
    CHECK((r.status == PlanStatus::no_path ||
           r.status == PlanStatus::no_connectable_node));
  }
  SUBCASE("iteration cap maps to budget exhaustion") {
    PlanRequest request;
    request.occupancy = OccupancySet(grid);
    request.start = home(m);
    request.target = home(m);
    request.target.arm1 = VecX(2);
    request.target.arm1 << -kPi / 2, 0.0;
    request.options.max_expansions = 1;
    request.options.iteration_cap = 1;
    const PlanResult r = plan(dual, m, request);
    CHECK(r.status == PlanStatus::budget_exceeded);
  }
  SUBCASE("invalid request parameters throw") {
    PlanRequest request;
    request.occupancy = OccupancySet(grid);
    request.start = home(m);
    request.target = home(m);
    request.options.resolution = 0.0;
    CHECK_THROWS_AS(plan(dual, m, request), InputError);
    request.options.resolution = 0.05;
    request.options.iteration_cap = 0;
    CHECK_THROWS_AS(plan(dual, m, request), InputError);
  }
  SUBCASE("occupancy from another grid is a compatibility error") {
    PlanRequest request;
    request.occupancy = OccupancySet(paper_grid());
    request.start = home(m);
    request.target = home(m);
    CHECK_THROWS_AS(plan(dual, m, request), CompatibilityError);
  }
}

TEST_CASE("validate_trajectory reports the first violation and its condition") {
  const RobotModel m = mini_dual(1, 2);
  const VoxelGrid grid = small_grid();
  const OccupancySet empty(grid);

  SUBCASE("single free waypoint") {
    CHECK(validate_trajectory(m, {home(m)}, grid, empty, 0.05).ok);
  }
  SUBCASE("empty waypoint list throws") {
    CHECK_THROWS_AS(validate_trajectory(m, {}, grid, empty, 0.05), InputError);
  }
  SUBCASE("segment through an active voxel reports condition 4 or 5") {
    VecX mid(2);
    mid << -kPi / 4, 0.0;
    const OccupancySet occ = tip_obstacle(m, grid, VecX::Zero(1), mid);
    FullConfig a = home(m);
    FullConfig b = home(m);
    b.arm2 = VecX(2);
    b.arm2 << -kPi / 2, 0.0;
    const auto report = validate_trajectory(m, {a, b}, grid, occ, 0.01);
    REQUIRE_FALSE(report.ok);
    CHECK(report.violation->condition == 5);
    CHECK(report.violation->segment == 0);
    CHECK(report.violation->s > 0.0);
    CHECK(report.violation->s < 1.0);
  }
  SUBCASE("arms crossing mid-segment with free endpoints reports condition 1") {
    FullConfig a = home(m);
    a.arm1 = VecX(2);
    a.arm1 << 0.0, -kPi / 2;
    FullConfig b = home(m);
    b.arm1 = VecX(2);
    b.arm1 << 0.0, kPi / 2;
    // swing arm1's forearm from -y through the midline while arm2's forearm
    // blocks the middle
    a.arm2 = VecX(2);
    b.arm2 = VecX(2);
    a.arm2 << 0.0, kPi / 2;
    b.arm2 << 0.0, kPi / 2;
    const int start_cond = collision_condition(m, a, grid, empty);
    const int end_cond = collision_condition(m, b, grid, empty);
    REQUIRE(start_cond == 0);
    REQUIRE(end_cond == 0);
    const auto report = validate_trajectory(m, {a, b}, grid, empty, 0.01);
    REQUIRE_FALSE(report.ok);
    CHECK(report.violation->condition == 1);
  }
}

TEST_CASE("shortcut") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  const VoxelGrid& grid = dual.r1.meta.grid;
  const OccupancySet empty(grid);

  SUBCASE("collinear redundant waypoints collapse to two") {
    std::vector<FullConfig> wp;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      FullConfig q = home(m);
      q.arm1 = VecX(2);
      q.arm1 << -kPi / 2 * s, 0.0;
      wp.push_back(q);
    }
    const auto cut = shortcut(m, wp, grid, empty, 0.05);
    CHECK(cut.size() == 2);
    CHECK(cut.front().arm1 == wp.front().arm1);
    CHECK(cut.back().arm1 == wp.back().arm1);
  }
  SUBCASE("with the obstacle removed, the detour straightens and cost drops") {
    VecX mid(2);
    mid << -kPi / 4, -kPi / 2;
    const OccupancySet occ = tip_obstacle(m, grid, VecX::Zero(1), mid);
    PlanRequest request;
    request.occupancy = occ;
    request.options.shortcut = false;
    request.start = home(m);
    request.target = home(m);
    request.target.arm2 = VecX(2);
    request.target.arm2 << -kPi / 2, -kPi;
    const PlanResult detour = plan(dual, m, request);
    REQUIRE(detour.ok());

    const auto cut = shortcut(m, detour.trajectory->waypoints, grid, empty, 0.05);
    CHECK(trajectory_cost(dual, cut) <= detour.trajectory->cost + 1e-12);
    CHECK(validate_trajectory(m, cut, grid, empty, 0.05).ok);
    if (detour.trajectory->waypoints.size() > 2) {
      CHECK(trajectory_cost(dual, cut) < detour.trajectory->cost - 1e-9);
    }
  }
  SUBCASE("no cut possible leaves the input unchanged") {
    VecX mid(2);
    mid << -kPi / 4, 0.0;
    const OccupancySet occ = tip_obstacle(m, grid, VecX::Zero(1), mid, 0.02);
    // a -> b -> c where the direct a -> c segment collides
    FullConfig a = home(m);
    FullConfig c = home(m);
    c.arm2 = VecX(2);
    c.arm2 << -kPi / 2, 0.0;
    FullConfig b = home(m);
    b.arm2 = VecX(2);
    b.arm2 << -kPi / 4, -kPi / 2;  // swings wide of the obstacle
    REQUIRE_FALSE(validate_trajectory(m, {a, c}, grid, occ, 0.02).ok);
    REQUIRE(validate_trajectory(m, {a, b, c}, grid, occ, 0.02).ok);
    const auto cut = shortcut(m, {a, b, c}, grid, occ, 0.02);
    CHECK(cut.size() == 3);
  }
}

TEST_CASE("soundness sweep over randomized worlds") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = medium_dual(m);
  const VoxelGrid& grid = dual.r1.meta.grid;
  TestRng rng(59);

  int planned = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_search_instance(dual, rng, 12, 0);
    if (!inst) continue;
    PlanRequest request;
    request.occupancy = inst->occupancy;
    request.start = compose(dual, inst->start);
    request.target = compose(dual, inst->target);
    if (config_collision(m, request.start, grid, inst->occupancy) ||
        config_collision(m, request.target, grid, inst->occupancy)) {
      continue;
    }
    const PlanResult r = plan(dual, m, request);
    if (!r.ok()) continue;
    ++planned;
    CHECK(validate_trajectory(m, r.trajectory->waypoints, grid, inst->occupancy,
                              request.options.resolution)
              .ok);
    CHECK(r.trajectory->waypoints.front().torso == request.start.torso);
    CHECK(r.trajectory->waypoints.back().torso == request.target.torso);
  }
  CHECK(planned > 5);
}
