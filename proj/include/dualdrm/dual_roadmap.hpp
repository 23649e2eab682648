#pragma once

#include "dualdrm/roadmap.hpp"

namespace dualdrm {

/// A same-torso node pair: one node of each roadmap, composing to a full
/// configuration. torso index equality is the defining constraint of the
/// implicit composed graph.
struct NodePair {
  NodeId a = kInvalidNode;  // node of r1
  NodeId b = kInvalidNode;  // node of r2

  friend bool operator==(const NodePair&, const NodePair&) = default;
};

inline std::uint64_t pair_key(NodePair p) {
  return (std::uint64_t(p.a) << 32) | p.b;
}

/// Two chain roadmaps over the exact same torso support plus the inter-arm
/// collision maps. inter1 maps each node of r1 to every node of r2 (same
/// torso index only) whose composition puts the arms in mutual collision;
/// inter2 is its transpose. Immutable after construction.
class DualRoadmap {
public:
  Roadmap r1;
  Roadmap r2;
  std::vector<std::uint64_t> inter1_offsets;
  std::vector<NodeId> inter1;
  std::vector<std::uint64_t> inter2_offsets;
  std::vector<NodeId> inter2;

  const Roadmap& roadmap(ChainId c) const { return c == ChainId::arm1 ? r1 : r2; }
  std::uint32_t torso_count() const { return r1.torso.size(); }

  std::span<const NodeId> inter_of_r1(NodeId a) const {
    return {inter1.data() + inter1_offsets[a],
            static_cast<std::size_t>(inter1_offsets[a + 1] - inter1_offsets[a])};
  }
  std::span<const NodeId> inter_of_r2(NodeId b) const {
    return {inter2.data() + inter2_offsets[b],
            static_cast<std::size_t>(inter2_offsets[b + 1] - inter2_offsets[b])};
  }

  bool inter_contains(NodePair p) const {
    const auto row = inter_of_r1(p.a);
    return std::binary_search(row.begin(), row.end(), p.b);
  }

  std::uint64_t inter_pair_count() const { return inter1.size(); }

  /// Eq-style support equality: both roadmaps share one torso table.
  bool torso_support_equal() const { return r1.torso == r2.torso; }
};

struct DualBuildLimits {
  BuildLimits per_roadmap;
  std::uint64_t pair_budget = 400'000'000;  // same-torso pair enumerations
};

struct DualHooks {
  ConstraintHook chain1;
  ConstraintHook chain2;
};

/// Algorithm: build both chain roadmaps over one shared torso table, then
/// enumerate all same-torso node pairs and record the inter-arm colliding
/// ones. Inter-arm checks use the same sphere padding as voxel pruning.
DualRoadmap build_dual(const RobotModel& model,
                       const std::vector<JointGrid>& torso_spec,
                       const std::vector<JointGrid>& arm1_spec,
                       const std::vector<JointGrid>& arm2_spec,
                       const VoxelGrid& grid, double padding,
                       const DualHooks& hooks = {},
                       const DualBuildLimits& limits = {},
                       std::uint32_t max_moving_joints = 2);

/// Proposition-style pair collision test: a same-torso pair is in collision
/// iff it appears in the inter-arm maps or either node is masked invalid.
/// Equals config_collision on the composed configuration at the stored
/// padding. Throws ContractError when the pair's torso indices differ.
bool pair_in_collision(const DualRoadmap& dual, const ValidityMask& mask1,
                       const ValidityMask& mask2, NodePair pair);

/// Composed full configuration of a same-torso pair (torso values bit-exact
/// from the shared table).
FullConfig compose(const DualRoadmap& dual, NodePair pair);

}  // namespace dualdrm
