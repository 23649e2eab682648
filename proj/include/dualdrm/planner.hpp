#pragma once

#include <optional>
#include <string>

#include "dualdrm/dual_search.hpp"

namespace dualdrm {

/// Which search runs inside plan(): the dual-roadmap graph search, or the
/// materialized product-graph A* oracle (small instances only).
enum class SearchBackend { dual, product_oracle };

struct PlanOptions {
  double resolution = 0.05;  // per-joint step between collision samples
  std::uint32_t iteration_cap = 50;  // search + repair rounds
  double time_budget_s = 30.0;       // 0 = unlimited
  bool shortcut = true;
  std::uint32_t restricted_retries = 2;  // failed restricted rounds before escalating
  bool allow_exhaustive = true;
  std::uint64_t max_expansions = 0;
  // interior samples blame the edge; samples this close to an endpoint blame
  // the node instead
  double node_blame_fraction = 0.10;
  SearchBackend backend = SearchBackend::dual;
  std::uint64_t product_budget = 100'000;  // pair cap for the oracle backend
};

struct PlanRequest {
  FullConfig start;
  FullConfig target;
  OccupancySet occupancy;
  PlanOptions options;
};

enum class PlanStatus {
  success,
  start_in_collision,
  target_in_collision,
  no_connectable_node,
  no_path,
  budget_exceeded,
};

const char* to_string(PlanStatus s);

struct PlanTimings {
  double prune_s = 0.0;
  double connect_s = 0.0;
  double search_s = 0.0;
  double check_s = 0.0;
  double shortcut_s = 0.0;
  double total_s = 0.0;
};

/// Piecewise-linear full-configuration path with planning statistics.
struct Trajectory {
  std::vector<FullConfig> waypoints;  // front() == start, back() == target
  double cost = 0.0;                  // path length, full-space metric
  SearchStats search;
  PlanTimings timings;
};

struct PlanResult {
  PlanStatus status = PlanStatus::no_path;
  std::optional<Trajectory> trajectory;
  std::string detail;
  SearchStats search;
  PlanTimings timings;

  bool ok() const { return status == PlanStatus::success; }
};

struct Violation {
  std::size_t segment = 0;  // index of the offending waypoint segment
  double s = 0.0;           // fraction along it
  int condition = 0;        // Appendix condition 1..5
  FullConfig sample;
};

struct ValidationReport {
  bool ok = true;
  std::optional<Violation> violation;
};

/// Densely samples every segment (both endpoints included) at the given
/// per-joint resolution and reports the first colliding sample together with
/// the violated collision condition.
ValidationReport validate_trajectory(const RobotModel& model,
                                     const std::vector<FullConfig>& waypoints,
                                     const VoxelGrid& grid,
                                     const OccupancySet& occupancy,
                                     double resolution);

/// Greedy shortcutting: repeatedly replaces the longest waypoint span whose
/// straight segment verifies collision-free. Never increases cost; falls
/// back to the input when nothing can be cut.
std::vector<FullConfig> shortcut(const RobotModel& model,
                                 const std::vector<FullConfig>& waypoints,
                                 const VoxelGrid& grid,
                                 const OccupancySet& occupancy,
                                 double resolution);

/// Full-space metric (torso weighted once, both arms).
double full_distance(const DualRoadmap& dual, const FullConfig& a,
                     const FullConfig& b);

struct EndpointAnchor {
  NodePair pair;
  FullConfig config;  // composed configuration of the pair
};

/// Connects an off-graph configuration to the nearest valid, mutually
/// collision-free node pair on one torso index, trying torso indices in
/// order of torso-metric distance and requiring the straight approach
/// segment to verify densely at `resolution`.
std::optional<EndpointAnchor> connect_endpoint(const DualRoadmap& dual,
                                               const RobotModel& model,
                                               const ValidityMask& mask1,
                                               const ValidityMask& mask2,
                                               const FullConfig& q,
                                               const OccupancySet& occupancy,
                                               double resolution);

double trajectory_cost(const DualRoadmap& dual,
                       const std::vector<FullConfig>& waypoints);

/// One online query: prune both roadmaps against the occupancy, connect the
/// endpoints to a same-torso anchor pair each, search the composed graph,
/// densely verify the composed path, and on a collision block the offending
/// per-arm edge (or mask the offending node) and search again. Escalates
/// restricted -> exhaustive search after repeated failures. The returned
/// trajectory always passes validate_trajectory at the request resolution.
PlanResult plan(const DualRoadmap& dual, const RobotModel& model,
                const PlanRequest& request);

}  // namespace dualdrm
