#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dualdrm/kinematics.hpp"
#include "dualdrm/robot_model.hpp"
#include "dualdrm/voxel_grid.hpp"

namespace dualdrm {

/// Uniform discretization of one joint: values lo + k*step for k < count.
struct JointGrid {
  double lo = 0.0;
  double step = 0.0;
  std::uint32_t count = 1;

  JointGrid() = default;
  JointGrid(double lo_, double hi_, double step_);

  double value(std::uint32_t k) const { return lo + step * k; }
  double hi() const { return lo + step * (count - 1); }
};

/// Discretization and metric parameters a roadmap was built with. Two
/// artifacts interoperate only when these match exactly.
struct RoadmapMeta {
  ChainId chain = ChainId::arm1;
  VoxelGrid grid;
  double padding = 0.0;
  std::uint32_t max_moving_joints = 2;
  std::vector<JointGrid> torso_spec;
  std::vector<JointGrid> arm_spec;
  std::vector<double> torso_weights;  // chain metric weights, default 1
  std::vector<double> arm_weights;

  /// Binds roadmap files to grid, padding, discretization and metric.
  std::uint64_t compat_hash() const;
};

/// Discrete torso sub-configurations shared by both roadmaps of a dual pair.
/// Row-major: value(t, j) = values[t*T + j]. Entries are bit-exact grid values.
struct TorsoTable {
  std::uint32_t T = 0;
  std::vector<double> values;

  std::uint32_t size() const {
    return T == 0 ? 0 : static_cast<std::uint32_t>(values.size() / T);
  }
  std::span<const double> row(std::uint32_t t) const {
    return {values.data() + std::size_t(t) * T, T};
  }

  static TorsoTable build(std::span<const JointGrid> spec);

  friend bool operator==(const TorsoTable&, const TorsoTable&) = default;
};

/// Per-query node validity overlay. The roadmap itself is never mutated; a
/// search owns one mask per roadmap. Bits mark invalidated nodes.
class ValidityMask {
public:
  ValidityMask() = default;
  explicit ValidityMask(std::size_t node_count)
      : bits_((node_count + 63) / 64, 0), size_(node_count) {}

  bool valid(NodeId i) const { return !((bits_[i >> 6] >> (i & 63)) & 1u); }
  void invalidate(NodeId i) { bits_[i >> 6] |= std::uint64_t(1) << (i & 63); }
  void reset() {
    std::fill(bits_.begin(), bits_.end(), 0);
    ++epoch_;
  }
  std::size_t size() const { return size_; }
  std::uint64_t epoch() const { return epoch_; }
  std::size_t invalid_count() const;

private:
  std::vector<std::uint64_t> bits_;
  std::size_t size_ = 0;
  std::uint64_t epoch_ = 0;
};

/// One kinematic chain's dynamic roadmap.
///
/// Nodes are the surviving grid points of the torso x arm product, ordered
/// lexicographically by (torso index, arm grid index); ids are dense 0..N-1.
/// Three maps make it a DRM: node configurations, adjacency, and the
/// voxel -> colliding-node lookup used for per-query pruning. All list
/// structures are CSR with sorted ids. Immutable after construction.
class Roadmap {
public:
  RoadmapMeta meta;
  TorsoTable torso;

  // Node map: node_values[i*(T+A) .. ] is node i's full chain configuration.
  std::vector<double> node_values;
  std::vector<std::uint32_t> torso_of;          // node -> torso table index
  std::vector<std::uint64_t> nodes_by_torso;    // torso index -> node id offsets
  std::vector<std::uint64_t> adj_offsets;       // adjacency CSR
  std::vector<NodeId> adj;
  std::vector<std::uint64_t> mc_offsets;        // voxel id -> colliding nodes CSR
  std::vector<NodeId> mc;

  std::uint32_t torso_dof() const { return torso.T; }
  std::uint32_t arm_dof() const {
    return static_cast<std::uint32_t>(meta.arm_spec.size());
  }
  std::uint32_t joint_dof() const { return torso_dof() + arm_dof(); }
  NodeId node_count() const {
    return static_cast<NodeId>(torso_of.size());
  }
  std::uint64_t edge_count() const { return adj.size() / 2; }

  std::span<const double> node_row(NodeId i) const {
    return {node_values.data() + std::size_t(i) * joint_dof(), joint_dof()};
  }
  ChainConfig node_config(NodeId i) const;
  std::span<const double> node_arm(NodeId i) const {
    const auto r = node_row(i);
    return r.subspan(torso_dof());
  }
  std::span<const NodeId> neighbors(NodeId i) const {
    return {adj.data() + adj_offsets[i],
            static_cast<std::size_t>(adj_offsets[i + 1] - adj_offsets[i])};
  }
  std::span<const NodeId> colliders_of_voxel(VoxelId j) const {
    return {mc.data() + mc_offsets[j],
            static_cast<std::size_t>(mc_offsets[j + 1] - mc_offsets[j])};
  }

  /// Node ids at one torso index are contiguous: [first, last).
  std::pair<NodeId, NodeId> torso_node_range(std::uint32_t t) const {
    return {static_cast<NodeId>(nodes_by_torso[t]),
            static_cast<NodeId>(nodes_by_torso[t + 1])};
  }

  /// Weighted Euclidean chain metric between a node and a configuration, or
  /// between two nodes.
  double distance(NodeId i, const ChainConfig& q) const;
  double distance(NodeId i, NodeId j) const;
  double torso_distance(std::uint32_t t, const VecX& torso_values) const;
};

struct BuildLimits {
  std::uint64_t node_cap = 2'000'000;
};

/// Optional per-node pruning predicate; return true to keep the node.
using ConstraintHook = std::function<bool(const ChainConfig&)>;

/// Builds one chain's roadmap over the uniform torso x arm grid (Cartesian
/// product, self-colliding and hook-rejected nodes discarded), the step
/// adjacency, and the voxel collision map. Deterministic for fixed inputs.
Roadmap build_roadmap(const RobotModel& model, ChainId chain,
                      const std::vector<JointGrid>& torso_spec,
                      const std::vector<JointGrid>& arm_spec,
                      const VoxelGrid& grid, double padding,
                      const ConstraintHook& hook = nullptr,
                      const BuildLimits& limits = {},
                      const TorsoTable* shared_torso = nullptr,
                      std::uint32_t max_moving_joints = 2);

/// Marks every node listed in the collision map of an active voxel invalid.
/// Throws CompatibilityError when the occupancy was built on another grid.
ValidityMask build_collision_set(const Roadmap& r, const OccupancySet& occupancy);

/// Valid node minimizing the chain metric to `target`, optionally restricted
/// to one torso index. Ties break to the lowest id. Empty when no valid node
/// exists under the constraint.
std::optional<NodeId> nearest_valid_node(
    const Roadmap& r, const ValidityMask& mask, const ChainConfig& target,
    std::optional<std::uint32_t> torso_index = std::nullopt);

/// The contiguous slice of adj(node) whose torso index equals `torso_index`.
std::span<const NodeId> neighbors_by_torso(const Roadmap& r, NodeId node,
                                           std::uint32_t torso_index);

/// Re-evaluates the support invariants (no stored node self-collides or
/// fails the hook). Used by tests and debug verification on load.
bool verify_roadmap_support(const Roadmap& r, const RobotModel& model,
                            const ConstraintHook& hook = nullptr);

}  // namespace dualdrm
