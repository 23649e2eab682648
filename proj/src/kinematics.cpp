#include "dualdrm/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dualdrm {

CollisionKernel::CollisionKernel(const RobotModel& model, double padding)
    : model_(model), padding_(padding) {
  if (!model.finalized()) {
    throw ContractError("RobotModel must be finalized before use");
  }
  torso_state_.frames.resize(model.torso.size());
  torso_state_.centers.resize(model.torso_spheres.size());
  arm_state_[0].frames.resize(model.arm1.size());
  arm_state_[0].centers.resize(model.arm1_spheres.size());
  arm_state_[1].frames.resize(model.arm2.size());
  arm_state_[1].centers.resize(model.arm2_spheres.size());
}

void CollisionKernel::update_centers(Body body) {
  const BodyState* st = nullptr;
  const std::vector<CollisionSphere>* spheres = nullptr;
  switch (body) {
    case Body::torso: st = &torso_state_; spheres = &model_.torso_spheres; break;
    case Body::arm1: st = &arm_state_[0]; spheres = &model_.arm1_spheres; break;
    case Body::arm2: st = &arm_state_[1]; spheres = &model_.arm2_spheres; break;
    case Body::base: return;
  }
  auto& centers = const_cast<BodyState*>(st)->centers;
  for (std::size_t i = 0; i < spheres->size(); ++i) {
    centers[i] = st->frames[(*spheres)[i].link] * (*spheres)[i].offset;
  }
}

void CollisionKernel::set_torso(const VecX& torso_values) {
  Isometry3 frame = Isometry3::Identity();
  for (std::size_t i = 0; i < model_.torso.size(); ++i) {
    frame = frame * model_.torso[i].origin * model_.torso[i].motion(torso_values[i]);
    torso_state_.frames[i] = frame;
  }
  torso_tip_ = frame;
  update_centers(Body::torso);
}

void CollisionKernel::set_arm(ChainId chain, const VecX& arm_values) {
  const auto& joints = model_.chain_joints(chain);
  auto& st = arm_state_[chain == ChainId::arm1 ? 0 : 1];
  Isometry3 frame = torso_tip_ * model_.mount(chain);
  for (std::size_t i = 0; i < joints.size(); ++i) {
    frame = frame * joints[i].origin * joints[i].motion(arm_values[i]);
    st.frames[i] = frame;
  }
  update_centers(chain == ChainId::arm1 ? Body::arm1 : Body::arm2);
}

void CollisionKernel::set_config(const FullConfig& q) {
  set_torso(q.torso);
  set_arm(ChainId::arm1, q.arm1);
  set_arm(ChainId::arm2, q.arm2);
}

bool CollisionKernel::self_collision(ChainId chain) const {
  auto center_of = [&](SphereRef r) -> const Vec3& {
    switch (r.body) {
      case Body::torso: return torso_state_.centers[r.index];
      case Body::arm1: return arm_state_[0].centers[r.index];
      case Body::arm2: return arm_state_[1].centers[r.index];
      default: return model_.base_spheres[r.index].center;
    }
  };
  auto radius_of = [&](SphereRef r) -> double {
    if (r.body == Body::base) return model_.base_spheres[r.index].radius;
    return model_.sphere(r).radius;
  };
  for (const auto& [a, b] : model_.self_pairs(chain)) {
    const double thr = radius_of(a) + radius_of(b) + 2.0 * padding_;
    if ((center_of(a) - center_of(b)).squaredNorm() < thr * thr) return true;
  }
  return false;
}

bool CollisionKernel::arms_collide() const {
  const auto& c1 = arm_state_[0].centers;
  const auto& c2 = arm_state_[1].centers;
  const auto& s1 = model_.arm1_spheres;
  const auto& s2 = model_.arm2_spheres;
  for (std::size_t i = 0; i < c1.size(); ++i) {
    for (std::size_t j = 0; j < c2.size(); ++j) {
      const double thr = s1[i].radius + s2[j].radius + 2.0 * padding_;
      if ((c1[i] - c2[j]).squaredNorm() < thr * thr) return true;
    }
  }
  return false;
}

namespace {

// Visits every voxel whose center lies strictly within `reach` of `center`.
template <typename F>
void scan_voxels(const VoxelGrid& grid, const Vec3& center, double reach, F&& f) {
  std::int64_t lo[3], hi[3];
  for (int k = 0; k < 3; ++k) {
    lo[k] = static_cast<std::int64_t>(
        std::floor((center[k] - reach - grid.min_corner[k]) / grid.voxel_size - 0.5));
    hi[k] = static_cast<std::int64_t>(
        std::floor((center[k] + reach - grid.min_corner[k]) / grid.voxel_size - 0.5)) + 1;
    lo[k] = std::max<std::int64_t>(lo[k], 0);
    hi[k] = std::min<std::int64_t>(hi[k], grid.dims[k] - 1);
  }
  const double r2 = reach * reach;
  for (std::int64_t iz = lo[2]; iz <= hi[2]; ++iz) {
    for (std::int64_t iy = lo[1]; iy <= hi[1]; ++iy) {
      for (std::int64_t ix = lo[0]; ix <= hi[0]; ++ix) {
        const Vec3 vc = grid.min_corner +
                        grid.voxel_size * Vec3(ix + 0.5, iy + 0.5, iz + 0.5);
        if ((vc - center).squaredNorm() < r2) {
          if (f(grid.id_of(static_cast<std::uint32_t>(ix),
                           static_cast<std::uint32_t>(iy),
                           static_cast<std::uint32_t>(iz)))) {
            return;
          }
        }
      }
    }
  }
}

}  // namespace

void CollisionKernel::voxel_hits(ChainId chain, const VoxelGrid& grid,
                                 std::vector<VoxelId>& out) const {
  const double circ = grid.circumscribing_radius();
  auto scan_body = [&](const std::vector<Vec3>& centers,
                       const std::vector<CollisionSphere>& spheres) {
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double reach = spheres[i].radius + padding_ + circ;
      scan_voxels(grid, centers[i], reach, [&](VoxelId id) {
        out.push_back(id);
        return false;
      });
    }
  };
  scan_body(torso_state_.centers, model_.torso_spheres);
  scan_body(arm_state_[chain == ChainId::arm1 ? 0 : 1].centers,
            model_.chain_spheres(chain));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

bool CollisionKernel::voxel_hit_active(ChainId chain, const VoxelGrid& grid,
                                       const OccupancySet& active) const {
  const double circ = grid.circumscribing_radius();
  bool hit = false;
  auto scan_body = [&](const std::vector<Vec3>& centers,
                       const std::vector<CollisionSphere>& spheres) {
    for (std::size_t i = 0; i < centers.size() && !hit; ++i) {
      const double reach = spheres[i].radius + padding_ + circ;
      scan_voxels(grid, centers[i], reach, [&](VoxelId id) {
        if (active.test(id)) {
          hit = true;
          return true;
        }
        return false;
      });
    }
  };
  scan_body(torso_state_.centers, model_.torso_spheres);
  if (!hit) {
    scan_body(arm_state_[chain == ChainId::arm1 ? 0 : 1].centers,
              model_.chain_spheres(chain));
  }
  return hit;
}

std::span<const Vec3> CollisionKernel::arm_centers(ChainId chain) const {
  const auto& c = arm_state_[chain == ChainId::arm1 ? 0 : 1].centers;
  return {c.data(), c.size()};
}

void CollisionKernel::arm_bounds(ChainId chain, Vec3& lo, Vec3& hi) const {
  const auto& centers = arm_state_[chain == ChainId::arm1 ? 0 : 1].centers;
  const auto& spheres = model_.chain_spheres(chain);
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double r = spheres[i].radius + padding_;
    lo = lo.cwiseMin(centers[i] - Vec3::Constant(r));
    hi = hi.cwiseMax(centers[i] + Vec3::Constant(r));
  }
}

// ---------------------------------------------------------------------------
// Free-function predicates

std::vector<WorldSphere> forward_kinematics(const RobotModel& model,
                                            const FullConfig& q) {
  model.require_within_limits(q);

  std::vector<WorldSphere> out;
  out.reserve(model.torso_spheres.size() + model.arm1_spheres.size() +
              model.arm2_spheres.size() + model.base_spheres.size());

  std::vector<Isometry3> frames(model.torso.size());
  Isometry3 f = Isometry3::Identity();
  for (std::size_t i = 0; i < model.torso.size(); ++i) {
    f = f * model.torso[i].origin * model.torso[i].motion(q.torso[i]);
    frames[i] = f;
  }
  for (const auto& s : model.torso_spheres) {
    out.push_back({frames[s.link] * s.offset, s.radius, Body::torso, s.link});
  }
  for (ChainId c : {ChainId::arm1, ChainId::arm2}) {
    Isometry3 af = f * model.mount(c);
    const auto& joints = model.chain_joints(c);
    std::vector<Isometry3> aframes(joints.size());
    for (std::size_t i = 0; i < joints.size(); ++i) {
      af = af * joints[i].origin * joints[i].motion(q.arm(c)[i]);
      aframes[i] = af;
    }
    const Body body = c == ChainId::arm1 ? Body::arm1 : Body::arm2;
    for (const auto& s : model.chain_spheres(c)) {
      out.push_back({aframes[s.link] * s.offset, s.radius, body, s.link});
    }
  }
  for (const auto& s : model.base_spheres) {
    out.push_back({s.center, s.radius, Body::base, -1});
  }
  return out;
}

bool chain_self_collision(const RobotModel& model, ChainId chain,
                          const ChainConfig& q, double padding) {
  model.require_within_limits(chain, q);
  CollisionKernel k(model, padding);
  k.set_torso(q.torso);
  k.set_arm(chain, q.arm);
  return k.self_collision(chain);
}

bool inter_arm_collision(const RobotModel& model, const FullConfig& q,
                         double padding) {
  model.require_within_limits(q);
  CollisionKernel k(model, padding);
  k.set_config(q);
  return k.arms_collide();
}

std::vector<VoxelId> chain_voxel_collision(const RobotModel& model, ChainId chain,
                                           const ChainConfig& q,
                                           const VoxelGrid& grid, double padding) {
  model.require_within_limits(chain, q);
  CollisionKernel k(model, padding);
  k.set_torso(q.torso);
  k.set_arm(chain, q.arm);
  std::vector<VoxelId> out;
  k.voxel_hits(chain, grid, out);
  return out;
}

int collision_condition(const RobotModel& model, const FullConfig& q,
                        const VoxelGrid& grid, const OccupancySet& active,
                        double padding) {
  model.require_within_limits(q);
  CollisionKernel k(model, padding);
  k.set_config(q);
  if (k.arms_collide()) return 1;
  if (k.self_collision(ChainId::arm1)) return 2;
  if (k.self_collision(ChainId::arm2)) return 3;
  if (k.voxel_hit_active(ChainId::arm1, grid, active)) return 4;
  if (k.voxel_hit_active(ChainId::arm2, grid, active)) return 5;
  return 0;
}

bool config_collision(const RobotModel& model, const FullConfig& q,
                      const VoxelGrid& grid, const OccupancySet& active,
                      double padding) {
  return collision_condition(model, q, grid, active, padding) != 0;
}

}  // namespace dualdrm
