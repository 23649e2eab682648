#include "dualdrm/dual_roadmap.hpp"

#include <algorithm>

#include "dualdrm/threading.hpp"

namespace dualdrm {

DualRoadmap build_dual(const RobotModel& model,
                       const std::vector<JointGrid>& torso_spec,
                       const std::vector<JointGrid>& arm1_spec,
                       const std::vector<JointGrid>& arm2_spec,
                       const VoxelGrid& grid, double padding,
                       const DualHooks& hooks, const DualBuildLimits& limits,
                       std::uint32_t max_moving_joints) {
  DualRoadmap dual;
  const TorsoTable torso = TorsoTable::build(torso_spec);
  dual.r1 = build_roadmap(model, ChainId::arm1, torso_spec, arm1_spec, grid,
                          padding, hooks.chain1, limits.per_roadmap, &torso,
                          max_moving_joints);
  dual.r2 = build_roadmap(model, ChainId::arm2, torso_spec, arm2_spec, grid,
                          padding, hooks.chain2, limits.per_roadmap, &torso,
                          max_moving_joints);

  const std::uint32_t n_torso = torso.size();
  std::uint64_t pair_count = 0;
  for (std::uint32_t t = 0; t < n_torso; ++t) {
    const auto [a0, a1] = dual.r1.torso_node_range(t);
    const auto [b0, b1] = dual.r2.torso_node_range(t);
    pair_count += std::uint64_t(a1 - a0) * (b1 - b0);
  }
  if (pair_count > limits.pair_budget) {
    throw CapacityError("inter-arm pair enumeration " + std::to_string(pair_count) +
                        " exceeds the budget " + std::to_string(limits.pair_budget));
  }

  const std::uint32_t T = dual.r1.torso_dof();
  const std::uint32_t A1 = dual.r1.arm_dof();
  const std::uint32_t A2 = dual.r2.arm_dof();
  const auto& s1 = model.arm1_spheres;
  const auto& s2 = model.arm2_spheres;

  // Per torso index: cache world sphere centers and bounds for every node of
  // both arms, then test all pairs. Sorted output per r1 node.
  std::vector<std::vector<NodeId>> rows(dual.r1.node_count());
  parallel_chunks(n_torso, [&](std::size_t tb, std::size_t te, std::size_t) {
    CollisionKernel kernel(model, padding);
    VecX tq(T), aq1(A1), aq2(A2);
    std::vector<Vec3> centers1, centers2;
    std::vector<Vec3> lo1, hi1, lo2, hi2;
    for (std::size_t t = tb; t < te; ++t) {
      const auto torso_row = dual.r1.torso.row(static_cast<std::uint32_t>(t));
      for (std::uint32_t j = 0; j < T; ++j) tq[j] = torso_row[j];
      kernel.set_torso(tq);

      const auto [a0, a1_end] = dual.r1.torso_node_range(static_cast<std::uint32_t>(t));
      const auto [b0, b1_end] = dual.r2.torso_node_range(static_cast<std::uint32_t>(t));
      const std::size_t na = a1_end - a0, nb = b1_end - b0;
      if (na == 0 || nb == 0) continue;

      centers1.resize(na * s1.size());
      lo1.resize(na);
      hi1.resize(na);
      for (std::size_t k = 0; k < na; ++k) {
        const auto arm = dual.r1.node_arm(static_cast<NodeId>(a0 + k));
        for (std::uint32_t j = 0; j < A1; ++j) aq1[j] = arm[j];
        kernel.set_arm(ChainId::arm1, aq1);
        const auto c = kernel.arm_centers(ChainId::arm1);
        std::copy(c.begin(), c.end(), centers1.begin() + k * s1.size());
        kernel.arm_bounds(ChainId::arm1, lo1[k], hi1[k]);
      }
      centers2.resize(nb * s2.size());
      lo2.resize(nb);
      hi2.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        const auto arm = dual.r2.node_arm(static_cast<NodeId>(b0 + k));
        for (std::uint32_t j = 0; j < A2; ++j) aq2[j] = arm[j];
        kernel.set_arm(ChainId::arm2, aq2);
        const auto c = kernel.arm_centers(ChainId::arm2);
        std::copy(c.begin(), c.end(), centers2.begin() + k * s2.size());
        kernel.arm_bounds(ChainId::arm2, lo2[k], hi2[k]);
      }

      for (std::size_t ka = 0; ka < na; ++ka) {
        auto& row = rows[a0 + ka];
        for (std::size_t kb = 0; kb < nb; ++kb) {
          if ((lo1[ka].array() > hi2[kb].array()).any() ||
              (lo2[kb].array() > hi1[ka].array()).any()) {
            continue;
          }
          bool hit = false;
          const Vec3* c1 = centers1.data() + ka * s1.size();
          const Vec3* c2 = centers2.data() + kb * s2.size();
          for (std::size_t i = 0; i < s1.size() && !hit; ++i) {
            for (std::size_t j = 0; j < s2.size(); ++j) {
              const double thr = s1[i].radius + s2[j].radius + 2.0 * padding;
              if ((c1[i] - c2[j]).squaredNorm() < thr * thr) {
                hit = true;
                break;
              }
            }
          }
          if (hit) row.push_back(static_cast<NodeId>(b0 + kb));
        }
      }
    }
  });

  // CSR assembly; rows are already sorted (b ascends within each torso group).
  dual.inter1_offsets.assign(dual.r1.node_count() + 1, 0);
  for (NodeId i = 0; i < dual.r1.node_count(); ++i) {
    dual.inter1_offsets[i + 1] = dual.inter1_offsets[i] + rows[i].size();
  }
  dual.inter1.resize(dual.inter1_offsets.back());
  for (NodeId i = 0; i < dual.r1.node_count(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(),
              dual.inter1.begin() + dual.inter1_offsets[i]);
  }

  // transpose: a-ascending fill keeps each r2 row sorted
  dual.inter2_offsets.assign(dual.r2.node_count() + 1, 0);
  for (NodeId b : dual.inter1) ++dual.inter2_offsets[b + 1];
  for (NodeId b = 0; b < dual.r2.node_count(); ++b) {
    dual.inter2_offsets[b + 1] += dual.inter2_offsets[b];
  }
  dual.inter2.resize(dual.inter1.size());
  std::vector<std::uint64_t> cursor(dual.inter2_offsets.begin(),
                                    dual.inter2_offsets.end() - 1);
  for (NodeId a = 0; a < dual.r1.node_count(); ++a) {
    for (std::uint64_t k = dual.inter1_offsets[a]; k < dual.inter1_offsets[a + 1]; ++k) {
      dual.inter2[cursor[dual.inter1[k]]++] = a;
    }
  }
  return dual;
}

bool pair_in_collision(const DualRoadmap& dual, const ValidityMask& mask1,
                       const ValidityMask& mask2, NodePair pair) {
  if (dual.r1.torso_of[pair.a] != dual.r2.torso_of[pair.b]) {
    throw ContractError("pair_in_collision requires equal torso indices");
  }
  if (!mask1.valid(pair.a) || !mask2.valid(pair.b)) return true;
  return dual.inter_contains(pair);
}

FullConfig compose(const DualRoadmap& dual, NodePair pair) {
  const std::uint32_t t1 = dual.r1.torso_of[pair.a];
  const std::uint32_t t2 = dual.r2.torso_of[pair.b];
  if (t1 != t2) throw ContractError("compose requires equal torso indices");
  FullConfig q;
  const auto torso_row = dual.r1.torso.row(t1);
  q.torso = Eigen::Map<const VecX>(torso_row.data(), torso_row.size());
  const auto a1 = dual.r1.node_arm(pair.a);
  const auto a2 = dual.r2.node_arm(pair.b);
  q.arm1 = Eigen::Map<const VecX>(a1.data(), a1.size());
  q.arm2 = Eigen::Map<const VecX>(a2.data(), a2.size());
  return q;
}

}  // namespace dualdrm
