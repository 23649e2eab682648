#pragma once

#include <array>
#include <string>
#include <vector>

#include "dualdrm/types.hpp"

namespace dualdrm {

struct Joint {
  enum class Kind : std::uint8_t { revolute, prismatic };

  Kind kind = Kind::revolute;
  Vec3 axis = Vec3::UnitZ();        // unit vector in the parent frame
  Isometry3 origin = Isometry3::Identity();  // parent frame -> joint frame, before motion
  double lo = 0.0;
  double hi = 0.0;

  /// Joint frame -> child link frame for a joint value q.
  Isometry3 motion(double q) const;
};

struct CollisionSphere {
  std::int32_t link = 0;  // index of the link this sphere is attached to
  Vec3 offset = Vec3::Zero();
  double radius = 0.0;
};

enum class Body : std::uint8_t { torso = 0, arm1 = 1, arm2 = 2, base = 3 };

const char* body_name(Body b);

/// Identifies one collision sphere: which body list it lives in and its index there.
struct SphereRef {
  Body body;
  std::uint16_t index;

  friend bool operator==(const SphereRef&, const SphereRef&) = default;
  friend auto operator<=>(const SphereRef&, const SphereRef&) = default;
};

struct WorldSphere {
  Vec3 center;
  double radius;
  Body body;
  std::int32_t link;
};

/// Torso sub-configuration plus one arm. The unit of roadmap storage.
struct ChainConfig {
  VecX torso;
  VecX arm;
};

/// Full robot configuration: shared torso plus both arms.
struct FullConfig {
  VecX torso;
  VecX arm1;
  VecX arm2;

  const VecX& arm(ChainId c) const { return c == ChainId::arm1 ? arm1 : arm2; }
};

inline ChainConfig project(const FullConfig& q, ChainId c) {
  return ChainConfig{q.torso, q.arm(c)};
}

inline std::pair<ChainConfig, ChainConfig> project(const FullConfig& q) {
  return {project(q, ChainId::arm1), project(q, ChainId::arm2)};
}

struct BaseSphere {
  Vec3 center;  // world frame, static
  double radius;
};

/// Kinematic and collision description of the dual-arm robot: a torso chain,
/// two arm chains mounted on the torso tip, link collision spheres, static
/// base spheres, and the self-collision pair policy.
///
/// After filling in the public fields call finalize(); it validates the
/// invariants and precomputes the per-chain sphere pair lists used by the
/// collision predicates. Models are immutable once finalized.
class RobotModel {
public:
  std::string name;
  std::vector<Joint> torso;
  std::vector<Joint> arm1;
  std::vector<Joint> arm2;
  Isometry3 arm1_mount = Isometry3::Identity();  // torso tip frame -> arm1 root
  Isometry3 arm2_mount = Isometry3::Identity();
  std::vector<CollisionSphere> torso_spheres;
  std::vector<CollisionSphere> arm1_spheres;
  std::vector<CollisionSphere> arm2_spheres;
  std::vector<BaseSphere> base_spheres;

  // Pairs exempted from self-collision checks beyond the default adjacency
  // exemptions, and pairs whose default exemption is explicitly revoked.
  std::vector<std::pair<SphereRef, SphereRef>> exempt_pairs;
  std::vector<std::pair<SphereRef, SphereRef>> force_check_pairs;

  void finalize();
  bool finalized() const { return finalized_; }

  const std::vector<Joint>& chain_joints(ChainId c) const {
    return c == ChainId::arm1 ? arm1 : arm2;
  }
  const std::vector<CollisionSphere>& chain_spheres(ChainId c) const {
    return c == ChainId::arm1 ? arm1_spheres : arm2_spheres;
  }
  const Isometry3& mount(ChainId c) const {
    return c == ChainId::arm1 ? arm1_mount : arm2_mount;
  }

  std::size_t torso_dof() const { return torso.size(); }
  std::size_t arm_dof(ChainId c) const { return chain_joints(c).size(); }

  bool within_limits(const FullConfig& q, double tol = 1e-9) const;
  bool within_limits(ChainId c, const ChainConfig& q, double tol = 1e-9) const;
  void require_within_limits(const FullConfig& q) const;  // throws InputError
  void require_within_limits(ChainId c, const ChainConfig& q) const;

  /// Sphere pairs that chain_self_collision must test for the given chain
  /// (torso, arm_i and base bodies, defaults and explicit policy applied).
  const std::vector<std::pair<SphereRef, SphereRef>>& self_pairs(ChainId c) const;

  const CollisionSphere& sphere(SphereRef r) const;

private:
  void validate() const;
  void build_self_pairs();

  bool finalized_ = false;
  std::vector<std::pair<SphereRef, SphereRef>> self_pairs_arm1_;
  std::vector<std::pair<SphereRef, SphereRef>> self_pairs_arm2_;
};

/// Parses a robot model from the JSON schema documented in docs/robot_schema.md.
RobotModel load_robot_model(const std::string& path);
RobotModel parse_robot_model(const std::string& json_text);

}  // namespace dualdrm
