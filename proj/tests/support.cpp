#include "support.hpp"

#include <cmath>

#include "dualdrm/robot_model.hpp"

namespace dualdrm::testing {

namespace {

Joint make_joint(const Vec3& axis, const Vec3& origin_xyz, double lo, double hi) {
  Joint j;
  j.kind = Joint::Kind::revolute;
  j.axis = axis;
  j.origin = Isometry3::Identity();
  j.origin.translation() = origin_xyz;
  j.lo = lo;
  j.hi = hi;
  return j;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

RobotModel planar_fk_model() {
  RobotModel m;
  m.name = "planar_fk";
  m.torso.push_back(make_joint(Vec3::UnitZ(), Vec3::Zero(), 0.0, 0.0));
  m.arm1.push_back(make_joint(Vec3::UnitZ(), Vec3::Zero(), -kPi, kPi));
  m.arm1.push_back(make_joint(Vec3::UnitZ(), Vec3(1, 0, 0), -kPi, kPi));
  m.arm1_spheres.push_back({0, Vec3(1, 0, 0), 0.1});
  m.arm1_spheres.push_back({1, Vec3(1, 0, 0), 0.1});
  m.arm2.push_back(make_joint(Vec3::UnitZ(), Vec3(0, 0, -5), 0.0, 0.0));
  m.finalize();
  return m;
}

RobotModel mini_dual(int torso_joints, int arm_joints) {
  RobotModel m;
  m.name = "mini_dual";
  m.base_spheres.push_back({Vec3(0, 0, 0.15), 0.10});

  m.torso.push_back(make_joint(Vec3::UnitZ(), Vec3(0, 0, 0.35), -kPi / 2, kPi / 2));
  if (torso_joints >= 2) {
    m.torso.push_back(make_joint(Vec3::UnitY(), Vec3(0, 0, 0.12), -kPi / 3, kPi / 3));
  }
  const int torso_tip = torso_joints - 1;
  m.torso_spheres.push_back({torso_tip, Vec3(0, 0, 0.06), 0.09});
  m.torso_spheres.push_back({torso_tip, Vec3(0, 0, 0.20), 0.09});

  for (ChainId c : {ChainId::arm1, ChainId::arm2}) {
    auto& joints = c == ChainId::arm1 ? m.arm1 : m.arm2;
    auto& spheres = c == ChainId::arm1 ? m.arm1_spheres : m.arm2_spheres;
    auto& mount = c == ChainId::arm1 ? m.arm1_mount : m.arm2_mount;
    const double side = c == ChainId::arm1 ? 1.0 : -1.0;
    mount = Isometry3::Identity();
    mount.translation() = Vec3(0, side * 0.18, 0.30);

    joints.push_back(make_joint(Vec3::UnitY(), Vec3::Zero(), -kPi, kPi));
    spheres.push_back({0, Vec3(0.09, 0, 0), 0.045});
    spheres.push_back({0, Vec3(0.18, 0, 0), 0.045});
    if (arm_joints >= 2) {
      joints.push_back(make_joint(Vec3::UnitZ(), Vec3(0.18, 0, 0), -kPi, kPi));
      spheres.push_back({1, Vec3(0.16, 0, 0), 0.04});
    }
    if (arm_joints >= 3) {
      joints.push_back(make_joint(Vec3::UnitY(), Vec3(0.16, 0, 0), -kPi, kPi));
      spheres.push_back({2, Vec3(0.12, 0, 0), 0.04});
    }
  }
  m.finalize();
  return m;
}

RobotModel desk_robot() {
  return load_robot_model(std::string(DUALDRM_ASSET_DIR) + "/robot_desk.json");
}

VoxelGrid small_grid() {
  return VoxelGrid(Vec3(-0.78, -0.78, 0.0), 0.06, {26, 26, 20});
}

VoxelGrid paper_grid() {
  return VoxelGrid(Vec3(-1.05, -1.05, 0.0), 0.06, {35, 35, 32});
}

FullConfig random_config(const RobotModel& model, TestRng& rng) {
  auto draw = [&](const std::vector<Joint>& joints) {
    VecX v(joints.size());
    for (std::size_t j = 0; j < joints.size(); ++j) {
      v[j] = rng.uniform(joints[j].lo, joints[j].hi);
    }
    return v;
  };
  FullConfig q;
  q.torso = draw(model.torso);
  q.arm1 = draw(model.arm1);
  q.arm2 = draw(model.arm2);
  return q;
}

std::vector<WorldSphere> oracle_fk(const RobotModel& model, const FullConfig& q) {
  auto joint_tf = [](const Joint& j, double v) {
    Isometry3 t = j.origin;
    if (j.kind == Joint::Kind::revolute) {
      t = t * Eigen::AngleAxisd(v, j.axis);
    } else {
      Isometry3 slide = Isometry3::Identity();
      slide.translation() = j.axis * v;
      t = t * slide;
    }
    return t;
  };

  std::vector<WorldSphere> out;
  std::vector<Isometry3> torso_frames;
  Isometry3 acc = Isometry3::Identity();
  for (std::size_t j = 0; j < model.torso.size(); ++j) {
    acc = acc * joint_tf(model.torso[j], q.torso[j]);
    torso_frames.push_back(acc);
  }
  for (const auto& s : model.torso_spheres) {
    out.push_back({torso_frames[s.link] * s.offset, s.radius, Body::torso, s.link});
  }
  for (ChainId c : {ChainId::arm1, ChainId::arm2}) {
    Isometry3 f = acc * model.mount(c);
    std::vector<Isometry3> frames;
    const auto& joints = model.chain_joints(c);
    for (std::size_t j = 0; j < joints.size(); ++j) {
      f = f * joint_tf(joints[j], q.arm(c)[j]);
      frames.push_back(f);
    }
    const Body body = c == ChainId::arm1 ? Body::arm1 : Body::arm2;
    for (const auto& s : model.chain_spheres(c)) {
      out.push_back({frames[s.link] * s.offset, s.radius, body, s.link});
    }
  }
  for (const auto& s : model.base_spheres) {
    out.push_back({s.center, s.radius, Body::base, -1});
  }
  return out;
}

namespace {

bool spheres_hit(const WorldSphere& a, const WorldSphere& b, double padding) {
  const double thr = a.radius + b.radius + 2.0 * padding;
  return (a.center - b.center).squaredNorm() < thr * thr;
}

bool oracle_self(const RobotModel& model, const std::vector<WorldSphere>& spheres,
                 ChainId chain, double padding) {
  const Body arm_body = chain == ChainId::arm1 ? Body::arm1 : Body::arm2;
  std::vector<const WorldSphere*> mine;
  std::vector<SphereRef> refs;
  std::uint16_t idx_torso = 0, idx_arm = 0, idx_base = 0;
  for (const auto& s : spheres) {
    if (s.body == Body::torso) {
      mine.push_back(&s);
      refs.push_back({Body::torso, idx_torso++});
    } else if (s.body == arm_body) {
      mine.push_back(&s);
      refs.push_back({arm_body, idx_arm++});
    } else if (s.body == Body::base) {
      mine.push_back(&s);
      refs.push_back({Body::base, idx_base++});
    }
  }
  const auto& pairs = model.self_pairs(chain);
  auto find = [&](SphereRef r) -> const WorldSphere* {
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (refs[i] == r) return mine[i];
    }
    return nullptr;
  };
  for (const auto& [ra, rb] : pairs) {
    const WorldSphere* a = find(ra);
    const WorldSphere* b = find(rb);
    if (a && b && spheres_hit(*a, *b, padding)) return true;
  }
  return false;
}

}  // namespace

int oracle_condition(const RobotModel& model, const FullConfig& q,
                     const VoxelGrid& grid, const OccupancySet& active,
                     double padding) {
  const auto spheres = oracle_fk(model, q);

  // 1: inter-arm
  for (const auto& a : spheres) {
    if (a.body != Body::arm1) continue;
    for (const auto& b : spheres) {
      if (b.body != Body::arm2) continue;
      if (spheres_hit(a, b, padding)) return 1;
    }
  }
  if (oracle_self(model, spheres, ChainId::arm1, padding)) return 2;
  if (oracle_self(model, spheres, ChainId::arm2, padding)) return 3;

  // 4/5: chain vs active voxel, brute force over the whole grid
  for (ChainId c : {ChainId::arm1, ChainId::arm2}) {
    const Body arm_body = c == ChainId::arm1 ? Body::arm1 : Body::arm2;
    for (const auto& s : spheres) {
      if (s.body != Body::torso && s.body != arm_body) continue;
      const double reach = s.radius + padding + grid.circumscribing_radius();
      for (std::uint64_t id = 0; id < grid.total_voxels(); ++id) {
        if (!active.test(static_cast<VoxelId>(id))) continue;
        if ((grid.voxel_center(static_cast<VoxelId>(id)) - s.center).norm() < reach) {
          return c == ChainId::arm1 ? 4 : 5;
        }
      }
    }
  }
  return 0;
}

std::optional<NodePair> sample_valid_pair(const DualRoadmap& dual,
                                          const ValidityMask& mask1,
                                          const ValidityMask& mask2, TestRng& rng) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const auto t = static_cast<std::uint32_t>(rng.below(dual.torso_count()));
    const auto [a0, a1] = dual.r1.torso_node_range(t);
    const auto [b0, b1] = dual.r2.torso_node_range(t);
    if (a0 == a1 || b0 == b1) continue;
    const NodePair p{a0 + static_cast<NodeId>(rng.below(a1 - a0)),
                     b0 + static_cast<NodeId>(rng.below(b1 - b0))};
    if (!pair_in_collision(dual, mask1, mask2, p)) return p;
  }
  return std::nullopt;
}

std::optional<SearchInstance> random_search_instance(const DualRoadmap& dual,
                                                     TestRng& rng, int n_voxels,
                                                     int n_blocked_edges,
                                                     double column_clearance) {
  const VoxelGrid& grid = dual.r1.meta.grid;
  SearchInstance inst{OccupancySet(grid), ValidityMask(), ValidityMask(),
                      BlockedEdges(), {}, {}};
  int placed = 0, guard = 0;
  while (placed < n_voxels && ++guard < 100 * (n_voxels + 1)) {
    const auto id = static_cast<VoxelId>(rng.below(grid.total_voxels()));
    if (grid.voxel_center(id).head<2>().norm() < column_clearance) continue;
    inst.occupancy.insert(id);
    ++placed;
  }
  inst.mask1 = build_collision_set(dual.r1, inst.occupancy);
  inst.mask2 = build_collision_set(dual.r2, inst.occupancy);

  for (int k = 0; k < n_blocked_edges; ++k) {
    const bool on_r1 = rng.below(2) == 0;
    const Roadmap& r = on_r1 ? dual.r1 : dual.r2;
    const NodeId u = static_cast<NodeId>(rng.below(r.node_count()));
    const auto nbrs = r.neighbors(u);
    if (nbrs.empty()) continue;
    const NodeId v = nbrs[rng.below(nbrs.size())];
    inst.blocked.insert(on_r1 ? ChainId::arm1 : ChainId::arm2, u, v);
  }

  const auto start = sample_valid_pair(dual, inst.mask1, inst.mask2, rng);
  const auto target = sample_valid_pair(dual, inst.mask1, inst.mask2, rng);
  if (!start || !target) return std::nullopt;
  inst.start = *start;
  inst.target = *target;
  return inst;
}

int classify_transition(const DualRoadmap& dual, NodePair from, NodePair to) {
  const Roadmap& r1 = dual.r1;
  const Roadmap& r2 = dual.r2;
  const std::uint32_t tf = r1.torso_of[from.a];
  const std::uint32_t tt = r1.torso_of[to.a];
  if (r2.torso_of[from.b] != tf || r2.torso_of[to.b] != tt) return 0;
  auto is_edge = [](const Roadmap& r, NodeId u, NodeId v) {
    const auto nbrs = r.neighbors(u);
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  };
  if (to.a == from.a && to.b != from.b && tt == tf) {
    return is_edge(r2, from.b, to.b) ? 2 : 0;
  }
  if (to.b == from.b && to.a != from.a && tt == tf) {
    return is_edge(r1, from.a, to.a) ? 1 : 0;
  }
  if (to.a != from.a && to.b != from.b && tt != tf) {
    return is_edge(r1, from.a, to.a) && is_edge(r2, from.b, to.b) ? 3 : 0;
  }
  return 0;
}

bool path_sound(const DualRoadmap& dual, const ValidityMask& mask1,
                const ValidityMask& mask2, const BlockedEdges& blocked,
                const std::vector<NodePair>& path) {
  if (path.empty()) return false;
  for (const NodePair& p : path) {
    if (pair_in_collision(dual, mask1, mask2, p)) return false;
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const int kind = classify_transition(dual, path[i], path[i + 1]);
    if (kind == 0) return false;
    if ((kind == 1 || kind == 3) &&
        blocked.contains(ChainId::arm1, path[i].a, path[i + 1].a)) {
      return false;
    }
    if ((kind == 2 || kind == 3) &&
        blocked.contains(ChainId::arm2, path[i].b, path[i + 1].b)) {
      return false;
    }
  }
  return true;
}

std::vector<VoxelId> oracle_chain_voxels(const RobotModel& model, ChainId chain,
                                         const ChainConfig& q, const VoxelGrid& grid,
                                         double padding) {
  FullConfig full;
  full.torso = q.torso;
  full.arm1 = chain == ChainId::arm1 ? q.arm : VecX::Zero(model.arm_dof(ChainId::arm1));
  full.arm2 = chain == ChainId::arm2 ? q.arm : VecX::Zero(model.arm_dof(ChainId::arm2));
  // zero may violate limits on exotic models; clamp
  auto clamp_vec = [&](VecX& v, const std::vector<Joint>& joints) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      v[j] = std::clamp(v[j], joints[j].lo, joints[j].hi);
    }
  };
  clamp_vec(full.arm1, model.arm1);
  clamp_vec(full.arm2, model.arm2);

  const auto spheres = oracle_fk(model, full);
  const Body arm_body = chain == ChainId::arm1 ? Body::arm1 : Body::arm2;
  std::vector<VoxelId> out;
  for (std::uint64_t id = 0; id < grid.total_voxels(); ++id) {
    const Vec3 c = grid.voxel_center(static_cast<VoxelId>(id));
    for (const auto& s : spheres) {
      if (s.body != Body::torso && s.body != arm_body) continue;
      const double reach = s.radius + padding + grid.circumscribing_radius();
      if ((c - s.center).norm() < reach) {
        out.push_back(static_cast<VoxelId>(id));
        break;
      }
    }
  }
  return out;
}

}  // namespace dualdrm::testing
