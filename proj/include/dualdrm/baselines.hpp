#pragma once

#include "dualdrm/planner.hpp"

namespace dualdrm {

struct ProductResult {
  SearchStatus status = SearchStatus::no_path;
  std::vector<NodePair> path;
  double cost_max = 0.0;
  double cost_sum = 0.0;
  std::uint64_t pairs_expanded = 0;
  std::uint64_t pair_slots = 0;  // materialized same-torso pair count
};

/// Ground-truth A* over the fully materialized masked product graph (every
/// same-torso pair gets a dense slot). Same transition rule and cost ordering
/// as dual_graph_search, independently implemented; only usable on small
/// instances. Throws CapacityError above `pair_budget` slots.
ProductResult product_astar(const DualRoadmap& dual, const ValidityMask& mask1,
                            const ValidityMask& mask2, const BlockedEdges& blocked,
                            NodePair start, NodePair target,
                            std::uint64_t pair_budget = 100'000);

struct LeaderFollowerOptions {
  PlanOptions plan;  // resolution, caps and budgets shared with the dual planner
};

/// Single-DRM baseline: the arm1 chain plans alone on its roadmap; arm2
/// follows a straight joint-space interpolation toward its goal, locally
/// repaired by greedy neighbor descent at the leader's torso index. Outputs
/// are verified by validate_trajectory and share plan's failure taxonomy.
PlanResult leader_follower_plan(const DualRoadmap& dual, const RobotModel& model,
                                const PlanRequest& request);

}  // namespace dualdrm
