#pragma once

#include <span>
#include <vector>

#include "dualdrm/robot_model.hpp"
#include "dualdrm/voxel_grid.hpp"

namespace dualdrm {

/// World-frame spheres for every collision body at the given configuration,
/// ordered torso, arm1, arm2, base. Throws InputError outside joint limits.
std::vector<WorldSphere> forward_kinematics(const RobotModel& model,
                                            const FullConfig& q);

/// True iff any non-exempt sphere pair within {torso, arm_i, base} intersects.
/// Robot spheres are inflated by `padding` on each side.
bool chain_self_collision(const RobotModel& model, ChainId chain,
                          const ChainConfig& q, double padding = 0.0);

/// True iff any arm1 sphere intersects any arm2 sphere under the shared torso.
bool inter_arm_collision(const RobotModel& model, const FullConfig& q,
                         double padding = 0.0);

/// Ids of every voxel whose circumscribing sphere intersects any torso or
/// arm_i sphere inflated by `padding`. Sorted ascending. Spheres reaching
/// outside the grid are clipped against it.
std::vector<VoxelId> chain_voxel_collision(const RobotModel& model,
                                           ChainId chain, const ChainConfig& q,
                                           const VoxelGrid& grid,
                                           double padding);

/// The ground-truth collision oracle: inter-arm, per-chain self-collision, or
/// contact between either chain and an active voxel.
bool config_collision(const RobotModel& model, const FullConfig& q,
                      const VoxelGrid& grid, const OccupancySet& active,
                      double padding = 0.0);

/// Like config_collision but reports which condition fired first:
///   0 free, 1 inter-arm, 2 self chain 1, 3 self chain 2,
///   4 chain 1 vs voxel, 5 chain 2 vs voxel.
int collision_condition(const RobotModel& model, const FullConfig& q,
                        const VoxelGrid& grid, const OccupancySet& active,
                        double padding = 0.0);

/// Collision kernel with reusable scratch buffers for the roadmap builders.
///
/// Frames and sphere centers are cached per set_torso / set_arm call so the
/// builders can iterate arms under a fixed torso without recomputing torso
/// FK. Not thread-safe; use one kernel per thread.
class CollisionKernel {
public:
  CollisionKernel(const RobotModel& model, double padding);

  void set_torso(const VecX& torso_values);
  void set_arm(ChainId chain, const VecX& arm_values);
  void set_config(const FullConfig& q);

  bool self_collision(ChainId chain) const;
  bool arms_collide() const;

  /// Appends voxel hits of the current torso+arm_i spheres; output sorted,
  /// deduplicated.
  void voxel_hits(ChainId chain, const VoxelGrid& grid,
                  std::vector<VoxelId>& out) const;
  bool voxel_hit_active(ChainId chain, const VoxelGrid& grid,
                        const OccupancySet& active) const;

  std::span<const Vec3> arm_centers(ChainId chain) const;

  /// Axis-aligned bounds of the current arm_i spheres including radii and
  /// padding; used as a cheap reject in inter-arm pair enumeration.
  void arm_bounds(ChainId chain, Vec3& lo, Vec3& hi) const;

  double padding() const { return padding_; }
  const RobotModel& model() const { return model_; }

private:
  struct BodyState {
    std::vector<Isometry3> frames;
    std::vector<Vec3> centers;
  };

  void update_centers(Body body);

  const RobotModel& model_;
  double padding_;
  BodyState torso_state_;
  BodyState arm_state_[2];
  Isometry3 torso_tip_ = Isometry3::Identity();
};

}  // namespace dualdrm
