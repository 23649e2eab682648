#pragma once

#include <optional>
#include <random>

#include "dualdrm/dual_roadmap.hpp"
#include "dualdrm/dual_search.hpp"
#include "dualdrm/kinematics.hpp"

// Shared fixtures and independent oracles for the test suites. The oracle
// implementations here deliberately avoid the library's collision kernel so
// the tests cross-check two code paths.
namespace dualdrm::testing {

/// Two-link planar arm (1 m links along x, z axes, r=0.1 tip spheres) carried
/// as arm1; torso and arm2 are inert single joints without spheres.
RobotModel planar_fk_model();

/// Small dual-arm robot for roadmap/search tests; scalable joint counts.
RobotModel mini_dual(int torso_joints = 1, int arm_joints = 2);

/// Desk-scale robot (T=2 torso, 3-joint arms), same model as assets/robot_desk.json.
RobotModel desk_robot();

VoxelGrid small_grid();  // 26x26x20 cells of 0.06 m around the mini robot
VoxelGrid paper_grid();  // (-1.05,-1.05,0), 0.06 m, 35x35x32

struct TestRng {
  std::mt19937_64 eng;
  explicit TestRng(std::uint64_t seed) : eng(seed) {}
  double uniform() { return double(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return n ? eng() % n : 0; }
};

FullConfig random_config(const RobotModel& model, TestRng& rng);

/// Independent forward kinematics: plain transform composition, separate from
/// CollisionKernel.
std::vector<WorldSphere> oracle_fk(const RobotModel& model, const FullConfig& q);

/// Independent five-condition collision enumeration built on oracle_fk.
/// Returns 0 when free, else the first violated condition 1..5.
int oracle_condition(const RobotModel& model, const FullConfig& q,
                     const VoxelGrid& grid, const OccupancySet& active,
                     double padding = 0.0);

/// Brute-force voxel hits of one chain (torso + arm_i spheres) for the
/// transpose and padding tests. Sorted ascending.
std::vector<VoxelId> oracle_chain_voxels(const RobotModel& model, ChainId chain,
                                         const ChainConfig& q, const VoxelGrid& grid,
                                         double padding);

/// A randomized search problem on an existing dual roadmap: occupancy (kept
/// clear of the torso column so instances stay non-degenerate), masks,
/// random blocked edges, and a valid start/target pair.
struct SearchInstance {
  OccupancySet occupancy;
  ValidityMask mask1, mask2;
  BlockedEdges blocked;
  NodePair start, target;
};

std::optional<NodePair> sample_valid_pair(const DualRoadmap& dual,
                                          const ValidityMask& mask1,
                                          const ValidityMask& mask2, TestRng& rng);

std::optional<SearchInstance> random_search_instance(const DualRoadmap& dual,
                                                     TestRng& rng, int n_voxels,
                                                     int n_blocked_edges,
                                                     double column_clearance = 0.3);

/// Classifies one composed-graph transition:
/// 0 illegal, 1 arm1 move, 2 arm2 move, 3 synchronized torso move.
int classify_transition(const DualRoadmap& dual, NodePair from, NodePair to);

/// Legal transitions, collision-free pairs, and no blocked edge used.
bool path_sound(const DualRoadmap& dual, const ValidityMask& mask1,
                const ValidityMask& mask2, const BlockedEdges& blocked,
                const std::vector<NodePair>& path);

}  // namespace dualdrm::testing
