#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualdrm/planner.hpp"

namespace dualdrm {

/// One planning problem: a voxel grid, its occupancy (explicit ids and/or
/// raw points), and the start/target configurations.
struct Scenario {
  VoxelGrid grid;
  std::vector<VoxelId> occupied;
  std::vector<Vec3> points;
  FullConfig start;
  FullConfig target;
  std::uint64_t seed = 0;
  std::string note;
};

OccupancySet scenario_occupancy(const Scenario& s);

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
void save_scenario(const std::string& path, const Scenario& s);

/// Serialized planner output: waypoints plus cost/stats metadata, bound to a
/// grid by its spec hash.
struct TrajectoryFile {
  std::vector<FullConfig> waypoints;
  double cost = 0.0;
  std::uint64_t grid_hash = 0;
  std::string planner;
  SearchStats search;
  PlanTimings timings;
};

TrajectoryFile load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const TrajectoryFile& t);

struct ShelfParams {
  double wall_x_min = 0.45;
  double wall_x_max = 0.72;
  double wall_y_half = 0.95;
  double wall_z_lo = 0.85;
  double wall_z_hi = 1.85;
  std::uint32_t openings_min = 1;
  std::uint32_t openings_max = 2;
  double opening_w_min = 0.30;
  double opening_w_max = 0.55;
  double opening_h_min = 0.30;
  double opening_h_max = 0.55;
  std::uint32_t blobs_max = 2;
  double blob_r_min = 0.06;
  double blob_r_max = 0.15;
  double endpoint_jitter = 0.5;      // fraction of a half grid step per joint
  double reach_through_prob = 0.65;  // bias targets to reach past the wall
  std::uint32_t max_attempts = 50;
  PlanOptions verify_options;  // scenarios are kept only if this plan succeeds
};

/// Randomized shelf world: a wall of voxels with rectangular openings in
/// front of the robot, optional obstacle blobs, and jittered off-grid
/// endpoints sampled from valid node pairs. Scenarios are rejection-sampled
/// until the dual planner solves them, so benchmark failures measure the
/// planner, not the problem. Deterministic per seed.
std::optional<Scenario> generate_shelf_scenario(const DualRoadmap& dual,
                                                const RobotModel& model,
                                                std::uint64_t seed,
                                                const ShelfParams& params = {});

}  // namespace dualdrm
