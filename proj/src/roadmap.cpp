#include "dualdrm/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualdrm/threading.hpp"

namespace dualdrm {

JointGrid::JointGrid(double lo_, double hi_, double step_) {
  if (!(step_ > 0.0)) throw InputError("joint grid step must be > 0");
  if (hi_ < lo_) throw InputError("joint grid requires lo <= hi");
  lo = lo_;
  step = step_;
  count = static_cast<std::uint32_t>(std::floor((hi_ - lo_) / step_ + 1e-9)) + 1;
}

TorsoTable TorsoTable::build(std::span<const JointGrid> spec) {
  TorsoTable t;
  t.T = static_cast<std::uint32_t>(spec.size());
  std::uint64_t n = 1;
  for (const auto& g : spec) n *= g.count;
  t.values.reserve(n * t.T);
  std::vector<std::uint32_t> idx(spec.size(), 0);
  for (std::uint64_t row = 0; row < n; ++row) {
    for (std::size_t j = 0; j < spec.size(); ++j) {
      t.values.push_back(spec[j].value(idx[j]));
    }
    // odometer, last joint fastest
    for (std::size_t j = spec.size(); j-- > 0;) {
      if (++idx[j] < spec[j].count) break;
      idx[j] = 0;
    }
  }
  return t;
}

std::uint64_t RoadmapMeta::compat_hash() const {
  std::uint64_t h = grid.spec_hash();
  h = fnv1a64_u64(static_cast<std::uint64_t>(chain), h);
  h = fnv1a64_f64(padding, h);
  h = fnv1a64_u64(max_moving_joints, h);
  auto mix_spec = [&h](const std::vector<JointGrid>& spec) {
    h = fnv1a64_u64(spec.size(), h);
    for (const auto& g : spec) {
      h = fnv1a64_f64(g.lo, h);
      h = fnv1a64_f64(g.step, h);
      h = fnv1a64_u64(g.count, h);
    }
  };
  mix_spec(torso_spec);
  mix_spec(arm_spec);
  for (double w : torso_weights) h = fnv1a64_f64(w, h);
  for (double w : arm_weights) h = fnv1a64_f64(w, h);
  return h;
}

std::size_t ValidityMask::invalid_count() const {
  std::size_t n = 0;
  for (NodeId i = 0; i < size_; ++i) {
    if (!valid(i)) ++n;
  }
  return n;
}

ChainConfig Roadmap::node_config(NodeId i) const {
  const auto row = node_row(i);
  ChainConfig q;
  q.torso = Eigen::Map<const VecX>(row.data(), torso_dof());
  q.arm = Eigen::Map<const VecX>(row.data() + torso_dof(), arm_dof());
  return q;
}

double Roadmap::distance(NodeId i, const ChainConfig& q) const {
  const auto row = node_row(i);
  double s = 0.0;
  for (std::uint32_t j = 0; j < torso_dof(); ++j) {
    const double d = row[j] - q.torso[j];
    s += meta.torso_weights[j] * d * d;
  }
  for (std::uint32_t j = 0; j < arm_dof(); ++j) {
    const double d = row[torso_dof() + j] - q.arm[j];
    s += meta.arm_weights[j] * d * d;
  }
  return std::sqrt(s);
}

double Roadmap::distance(NodeId i, NodeId j) const {
  const auto a = node_row(i);
  const auto b = node_row(j);
  double s = 0.0;
  for (std::uint32_t k = 0; k < torso_dof(); ++k) {
    const double d = a[k] - b[k];
    s += meta.torso_weights[k] * d * d;
  }
  for (std::uint32_t k = 0; k < arm_dof(); ++k) {
    const double d = a[torso_dof() + k] - b[torso_dof() + k];
    s += meta.arm_weights[k] * d * d;
  }
  return std::sqrt(s);
}

double Roadmap::torso_distance(std::uint32_t t, const VecX& torso_values) const {
  const auto row = torso.row(t);
  double s = 0.0;
  for (std::uint32_t j = 0; j < torso.T; ++j) {
    const double d = row[j] - torso_values[j];
    s += meta.torso_weights[j] * d * d;
  }
  return std::sqrt(s);
}

namespace {

// Mixed-radix decode of a flat product index, last coordinate fastest.
void decode_index(std::uint64_t flat, std::span<const JointGrid> spec,
                  std::span<std::uint32_t> out) {
  for (std::size_t j = spec.size(); j-- > 0;) {
    out[j] = static_cast<std::uint32_t>(flat % spec[j].count);
    flat /= spec[j].count;
  }
}

// All coordinate deltas touching 1..max_moving joints by one step each.
std::vector<std::vector<std::int8_t>> step_deltas(std::size_t dof,
                                                  std::uint32_t max_moving) {
  std::vector<std::vector<std::int8_t>> out;
  std::vector<std::size_t> joints;
  auto emit_signs = [&](auto&& self, std::size_t pos,
                        std::vector<std::int8_t>& delta) -> void {
    if (pos == joints.size()) {
      out.push_back(delta);
      return;
    }
    for (int s : {-1, +1}) {
      delta[joints[pos]] = static_cast<std::int8_t>(s);
      self(self, pos + 1, delta);
    }
    delta[joints[pos]] = 0;
  };
  auto choose = [&](auto&& self, std::size_t start, std::uint32_t remaining) -> void {
    if (!joints.empty()) {
      std::vector<std::int8_t> delta(dof, 0);
      emit_signs(emit_signs, 0, delta);
    }
    if (remaining == 0) return;
    for (std::size_t j = start; j < dof; ++j) {
      joints.push_back(j);
      self(self, j + 1, remaining - 1);
      joints.pop_back();
    }
  };
  choose(choose, 0, max_moving);
  return out;
}

}  // namespace

Roadmap build_roadmap(const RobotModel& model, ChainId chain,
                      const std::vector<JointGrid>& torso_spec,
                      const std::vector<JointGrid>& arm_spec,
                      const VoxelGrid& grid, double padding,
                      const ConstraintHook& hook, const BuildLimits& limits,
                      const TorsoTable* shared_torso,
                      std::uint32_t max_moving_joints) {
  if (torso_spec.size() != model.torso_dof() ||
      arm_spec.size() != model.arm_dof(chain)) {
    throw InputError("discretization spec does not match the model's joint counts");
  }
  for (std::size_t j = 0; j < torso_spec.size(); ++j) {
    if (torso_spec[j].lo < model.torso[j].lo - 1e-9 ||
        torso_spec[j].hi() > model.torso[j].hi + 1e-9) {
      throw InputError("torso grid exceeds joint limits");
    }
  }
  const auto& arm_joints = model.chain_joints(chain);
  for (std::size_t j = 0; j < arm_spec.size(); ++j) {
    if (arm_spec[j].lo < arm_joints[j].lo - 1e-9 ||
        arm_spec[j].hi() > arm_joints[j].hi + 1e-9) {
      throw InputError("arm grid exceeds joint limits");
    }
  }

  Roadmap r;
  r.meta.chain = chain;
  r.meta.grid = grid;
  r.meta.padding = padding;
  r.meta.max_moving_joints = max_moving_joints;
  r.meta.torso_spec = torso_spec;
  r.meta.arm_spec = arm_spec;
  r.meta.torso_weights.assign(torso_spec.size(), 1.0);
  r.meta.arm_weights.assign(arm_spec.size(), 1.0);
  r.torso = shared_torso ? *shared_torso : TorsoTable::build(torso_spec);

  const std::uint32_t T = static_cast<std::uint32_t>(torso_spec.size());
  const std::uint32_t A = static_cast<std::uint32_t>(arm_spec.size());
  const std::uint32_t n_torso = r.torso.size();
  std::uint64_t n_arm = 1;
  for (const auto& g : arm_spec) n_arm *= g.count;
  const std::uint64_t candidates = std::uint64_t(n_torso) * n_arm;
  if (candidates > limits.node_cap) {
    throw CapacityError("roadmap candidate count " + std::to_string(candidates) +
                        " exceeds the node cap " + std::to_string(limits.node_cap));
  }

  // Phase 1: evaluate candidates, assign dense ids in (torso, arm) order.
  std::vector<NodeId> grid_to_node(candidates, kInvalidNode);
  std::vector<std::uint8_t> keep(candidates, 0);
  {
    std::vector<double> arm_values(n_arm * A);
    {
      std::vector<std::uint32_t> idx(A, 0);
      for (std::uint64_t a = 0; a < n_arm; ++a) {
        for (std::uint32_t j = 0; j < A; ++j)
          arm_values[a * A + j] = arm_spec[j].value(idx[j]);
        for (std::size_t j = A; j-- > 0;) {
          if (++idx[j] < arm_spec[j].count) break;
          idx[j] = 0;
        }
      }
    }
    parallel_chunks(n_torso, [&](std::size_t tb, std::size_t te, std::size_t) {
      CollisionKernel kernel(model, padding);
      ChainConfig q;
      q.torso.resize(T);
      q.arm.resize(A);
      for (std::size_t t = tb; t < te; ++t) {
        const auto torso_row = r.torso.row(static_cast<std::uint32_t>(t));
        for (std::uint32_t j = 0; j < T; ++j) q.torso[j] = torso_row[j];
        kernel.set_torso(q.torso);
        for (std::uint64_t a = 0; a < n_arm; ++a) {
          for (std::uint32_t j = 0; j < A; ++j) q.arm[j] = arm_values[a * A + j];
          kernel.set_arm(chain, q.arm);
          if (kernel.self_collision(chain)) continue;
          if (hook && !hook(q)) continue;
          keep[t * n_arm + a] = 1;
        }
      }
    });
  }

  NodeId next = 0;
  for (std::uint64_t g = 0; g < candidates; ++g) {
    if (keep[g]) grid_to_node[g] = next++;
  }
  const NodeId n_nodes = next;
  if (n_nodes == 0) {
    throw CapacityError("all candidate nodes were discarded; empty roadmap");
  }

  // Phase 2: node table and torso grouping.
  r.node_values.resize(std::size_t(n_nodes) * (T + A));
  r.torso_of.resize(n_nodes);
  r.nodes_by_torso.assign(n_torso + 1, 0);
  {
    std::vector<std::uint32_t> arm_idx(A, 0);
    NodeId id = 0;
    for (std::uint32_t t = 0; t < n_torso; ++t) {
      const auto torso_row = r.torso.row(t);
      std::fill(arm_idx.begin(), arm_idx.end(), 0);
      for (std::uint64_t a = 0; a < n_arm; ++a) {
        if (keep[std::uint64_t(t) * n_arm + a]) {
          double* row = r.node_values.data() + std::size_t(id) * (T + A);
          for (std::uint32_t j = 0; j < T; ++j) row[j] = torso_row[j];
          for (std::uint32_t j = 0; j < A; ++j) row[T + j] = arm_spec[j].value(arm_idx[j]);
          r.torso_of[id] = t;
          ++id;
        }
        for (std::size_t j = A; j-- > 0;) {
          if (++arm_idx[j] < arm_spec[j].count) break;
          arm_idx[j] = 0;
        }
      }
      r.nodes_by_torso[t + 1] = id;
    }
  }

  // Phase 3: adjacency. Neighbors differ by one step in at most
  // max_moving_joints joints.
  {
    std::vector<JointGrid> full_spec = torso_spec;
    full_spec.insert(full_spec.end(), arm_spec.begin(), arm_spec.end());
    const auto deltas = step_deltas(T + A, max_moving_joints);

    std::vector<std::vector<NodeId>> adj_chunks(n_nodes);
    parallel_chunks(n_nodes, [&](std::size_t nb, std::size_t ne, std::size_t) {
      std::vector<std::uint32_t> coords(T + A), ncoords(T + A);
      for (std::size_t i = nb; i < ne; ++i) {
        // grid coordinates of node i: torso part from its torso index, arm
        // part decoded from the stored (exact) grid values
        decode_index(r.torso_of[i], torso_spec, std::span(coords).first(T));
        const double* row = r.node_values.data() + i * (T + A);
        for (std::uint32_t j = 0; j < A; ++j) {
          const double k = (row[T + j] - arm_spec[j].lo) / arm_spec[j].step;
          coords[T + j] = static_cast<std::uint32_t>(std::llround(k));
        }
        auto& out = adj_chunks[i];
        for (const auto& d : deltas) {
          bool ok = true;
          for (std::uint32_t j = 0; j < T + A && ok; ++j) {
            const std::int64_t c = std::int64_t(coords[j]) + d[j];
            if (c < 0 || c >= std::int64_t(full_spec[j].count)) {
              ok = false;
            } else {
              ncoords[j] = static_cast<std::uint32_t>(c);
            }
          }
          if (!ok) continue;
          std::uint64_t tflat = 0;
          for (std::uint32_t j = 0; j < T; ++j)
            tflat = tflat * torso_spec[j].count + ncoords[j];
          std::uint64_t aflat = 0;
          for (std::uint32_t j = 0; j < A; ++j)
            aflat = aflat * arm_spec[j].count + ncoords[T + j];
          const NodeId n = grid_to_node[tflat * n_arm + aflat];
          if (n != kInvalidNode) out.push_back(n);
        }
        std::sort(out.begin(), out.end());
      }
    });

    r.adj_offsets.assign(n_nodes + 1, 0);
    for (NodeId i = 0; i < n_nodes; ++i) {
      r.adj_offsets[i + 1] = r.adj_offsets[i] + adj_chunks[i].size();
    }
    r.adj.resize(r.adj_offsets[n_nodes]);
    for (NodeId i = 0; i < n_nodes; ++i) {
      std::copy(adj_chunks[i].begin(), adj_chunks[i].end(),
                r.adj.begin() + r.adj_offsets[i]);
    }
  }

  // Phase 4: voxel collision map, transposed to voxel-major CSR.
  {
    std::vector<std::vector<VoxelId>> hits(n_nodes);
    parallel_chunks(n_torso, [&](std::size_t tb, std::size_t te, std::size_t) {
      CollisionKernel kernel(model, padding);
      VecX tq(T), aq(A);
      for (std::size_t t = tb; t < te; ++t) {
        const auto torso_row = r.torso.row(static_cast<std::uint32_t>(t));
        for (std::uint32_t j = 0; j < T; ++j) tq[j] = torso_row[j];
        kernel.set_torso(tq);
        for (std::uint64_t i = r.nodes_by_torso[t]; i < r.nodes_by_torso[t + 1]; ++i) {
          const double* row = r.node_values.data() + i * (T + A);
          for (std::uint32_t j = 0; j < A; ++j) aq[j] = row[T + j];
          kernel.set_arm(chain, aq);
          kernel.voxel_hits(chain, grid, hits[i]);
        }
      }
    });

    const std::uint64_t n_vox = grid.total_voxels();
    r.mc_offsets.assign(n_vox + 1, 0);
    for (NodeId i = 0; i < n_nodes; ++i) {
      for (VoxelId v : hits[i]) ++r.mc_offsets[v + 1];
    }
    for (std::uint64_t v = 0; v < n_vox; ++v) {
      r.mc_offsets[v + 1] += r.mc_offsets[v];
    }
    r.mc.resize(r.mc_offsets[n_vox]);
    std::vector<std::uint64_t> cursor(r.mc_offsets.begin(), r.mc_offsets.end() - 1);
    // node-ascending fill keeps each voxel's list sorted
    for (NodeId i = 0; i < n_nodes; ++i) {
      for (VoxelId v : hits[i]) r.mc[cursor[v]++] = i;
    }
  }

  return r;
}

ValidityMask build_collision_set(const Roadmap& r, const OccupancySet& occupancy) {
  if (occupancy.grid_hash() != r.meta.grid.spec_hash()) {
    throw CompatibilityError(
        "occupancy set was built on a different voxel grid than the roadmap");
  }
  ValidityMask mask(r.node_count());
  occupancy.for_each_active([&](VoxelId j) {
    for (NodeId i : r.colliders_of_voxel(j)) mask.invalidate(i);
  });
  return mask;
}

std::optional<NodeId> nearest_valid_node(const Roadmap& r, const ValidityMask& mask,
                                         const ChainConfig& target,
                                         std::optional<std::uint32_t> torso_index) {
  std::uint64_t begin = 0, end = r.node_count();
  if (torso_index) {
    if (*torso_index >= r.torso.size()) throw InputError("torso index out of range");
    begin = r.nodes_by_torso[*torso_index];
    end = r.nodes_by_torso[*torso_index + 1];
  }
  std::optional<NodeId> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::uint64_t i = begin; i < end; ++i) {
    const NodeId id = static_cast<NodeId>(i);
    if (!mask.valid(id)) continue;
    const double d = r.distance(id, target);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

std::span<const NodeId> neighbors_by_torso(const Roadmap& r, NodeId node,
                                           std::uint32_t torso_index) {
  const auto nbrs = r.neighbors(node);
  // neighbor ids ascend, and id order follows torso order, so each torso
  // group is one contiguous slice
  const auto* lo = std::partition_point(nbrs.data(), nbrs.data() + nbrs.size(),
                                        [&](NodeId n) { return r.torso_of[n] < torso_index; });
  const auto* hi = std::partition_point(lo, nbrs.data() + nbrs.size(),
                                        [&](NodeId n) { return r.torso_of[n] <= torso_index; });
  return {lo, static_cast<std::size_t>(hi - lo)};
}

bool verify_roadmap_support(const Roadmap& r, const RobotModel& model,
                            const ConstraintHook& hook) {
  CollisionKernel kernel(model, r.meta.padding);
  const std::uint32_t T = r.torso_dof(), A = r.arm_dof();
  VecX tq(T), aq(A);
  for (std::uint32_t t = 0; t < r.torso.size(); ++t) {
    const auto row = r.torso.row(t);
    for (std::uint32_t j = 0; j < T; ++j) tq[j] = row[j];
    kernel.set_torso(tq);
    for (std::uint64_t i = r.nodes_by_torso[t]; i < r.nodes_by_torso[t + 1]; ++i) {
      const double* nrow = r.node_values.data() + i * (T + A);
      for (std::uint32_t j = 0; j < T; ++j) {
        if (nrow[j] != row[j]) return false;  // torso values must be bit-exact
      }
      for (std::uint32_t j = 0; j < A; ++j) aq[j] = nrow[T + j];
      kernel.set_arm(r.meta.chain, aq);
      if (kernel.self_collision(r.meta.chain)) return false;
      if (hook) {
        ChainConfig q{tq, aq};
        if (!hook(q)) return false;
      }
    }
  }
  return true;
}

}  // namespace dualdrm
