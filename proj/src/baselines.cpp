#include "dualdrm/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

namespace dualdrm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SlotTable {
  // dense slot per same-torso pair: base[t] + (a - a0[t]) * nb[t] + (b - b0[t])
  std::vector<std::uint64_t> base;
  std::vector<NodeId> a0, b0;
  std::vector<std::uint64_t> nb;
  std::uint64_t total = 0;

  std::uint64_t slot(const DualRoadmap& dual, NodePair p) const {
    const std::uint32_t t = dual.r1.torso_of[p.a];
    return base[t] + std::uint64_t(p.a - a0[t]) * nb[t] + (p.b - b0[t]);
  }
};

SlotTable make_slots(const DualRoadmap& dual) {
  SlotTable s;
  const std::uint32_t n_torso = dual.torso_count();
  s.base.resize(n_torso);
  s.a0.resize(n_torso);
  s.b0.resize(n_torso);
  s.nb.resize(n_torso);
  std::uint64_t acc = 0;
  for (std::uint32_t t = 0; t < n_torso; ++t) {
    const auto [a0, a1] = dual.r1.torso_node_range(t);
    const auto [b0, b1] = dual.r2.torso_node_range(t);
    s.base[t] = acc;
    s.a0[t] = a0;
    s.b0[t] = b0;
    s.nb[t] = b1 - b0;
    acc += std::uint64_t(a1 - a0) * (b1 - b0);
  }
  s.total = acc;
  return s;
}

}  // namespace

ProductResult product_astar(const DualRoadmap& dual, const ValidityMask& mask1,
                            const ValidityMask& mask2, const BlockedEdges& blocked,
                            NodePair start, NodePair target,
                            std::uint64_t pair_budget) {
  const Roadmap& r1 = dual.r1;
  const Roadmap& r2 = dual.r2;

  const SlotTable slots = make_slots(dual);
  if (slots.total > pair_budget) {
    throw CapacityError("product graph has " + std::to_string(slots.total) +
                        " pairs, exceeding the budget " +
                        std::to_string(pair_budget));
  }

  auto endpoint_ok = [&](NodePair p) {
    return p.a < r1.node_count() && p.b < r2.node_count() &&
           r1.torso_of[p.a] == r2.torso_of[p.b] &&
           !pair_in_collision(dual, mask1, mask2, p);
  };
  if (!endpoint_ok(start) || !endpoint_ok(target)) {
    throw ContractError("product_astar endpoints must be valid same-torso pairs");
  }

  ProductResult res;
  res.pair_slots = slots.total;
  if (start == target) {
    res.status = SearchStatus::found;
    res.path = {start};
    return res;
  }

  // Fully materialized validity and cost tables.
  std::vector<std::uint8_t> slot_valid(slots.total, 0);
  for (std::uint32_t t = 0; t < dual.torso_count(); ++t) {
    const auto [a0, a1] = r1.torso_node_range(t);
    const auto [b0, b1] = r2.torso_node_range(t);
    for (NodeId a = a0; a < a1; ++a) {
      if (!mask1.valid(a)) continue;
      const auto inter = dual.inter_of_r1(a);
      std::uint64_t base = slots.base[t] + std::uint64_t(a - a0) * slots.nb[t];
      auto it = inter.begin();
      for (NodeId b = b0; b < b1; ++b) {
        while (it != inter.end() && *it < b) ++it;
        const bool inter_hit = it != inter.end() && *it == b;
        slot_valid[base + (b - b0)] = mask2.valid(b) && !inter_hit;
      }
    }
  }

  std::vector<double> g1(slots.total, kInf), g2(slots.total, kInf);
  std::vector<std::uint64_t> parent(slots.total, std::uint64_t(-1));

  struct Entry {
    double priority, gsum;
    NodeId a, b;
    double g1, g2;
  };
  struct Worse {
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.priority != y.priority) return x.priority > y.priority;
      if (x.gsum != y.gsum) return x.gsum < y.gsum;
      if (x.a != y.a) return x.a > y.a;
      if (x.b != y.b) return x.b > y.b;
      return x.g1 > y.g1;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Worse> queue;

  auto push = [&](NodePair p, double ng1, double ng2) {
    const double f1 = ng1 + r1.distance(p.a, target.a);
    const double f2 = ng2 + r2.distance(p.b, target.b);
    queue.push({std::max(f1, f2), ng1 + ng2, p.a, p.b, ng1, ng2});
  };
  auto relax = [&](NodePair p, double ng1, double ng2, std::uint64_t from) {
    const std::uint64_t s = slots.slot(dual, p);
    if (!slot_valid[s]) return;
    const double omax = std::max(g1[s], g2[s]);
    const double nmax = std::max(ng1, ng2);
    if (nmax < omax || (nmax == omax && ng1 + ng2 < g1[s] + g2[s])) {
      g1[s] = ng1;
      g2[s] = ng2;
      parent[s] = from;
      push(p, ng1, ng2);
    }
  };

  const std::uint64_t start_slot = slots.slot(dual, start);
  const std::uint64_t target_slot = slots.slot(dual, target);
  g1[start_slot] = g2[start_slot] = 0.0;
  push(start, 0.0, 0.0);

  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    const NodePair cur{e.a, e.b};
    const std::uint64_t s = slots.slot(dual, cur);
    if (e.g1 != g1[s] || e.g2 != g2[s]) continue;

    if (s == target_slot) {
      res.status = SearchStatus::found;
      res.cost_max = std::max(g1[s], g2[s]);
      res.cost_sum = g1[s] + g2[s];
      // reconstruct via parent slots; empty torso groups collapse to equal
      // bases, so upper_bound lands one past the owning group
      std::uint64_t w = s;
      while (true) {
        const auto it = std::upper_bound(slots.base.begin(), slots.base.end(), w);
        const std::uint32_t t =
            static_cast<std::uint32_t>(it - slots.base.begin()) - 1;
        const std::uint64_t off = w - slots.base[t];
        const NodeId a = slots.a0[t] + static_cast<NodeId>(off / slots.nb[t]);
        const NodeId b = slots.b0[t] + static_cast<NodeId>(off % slots.nb[t]);
        res.path.push_back({a, b});
        if (w == start_slot) break;
        w = parent[w];
      }
      std::reverse(res.path.begin(), res.path.end());
      return res;
    }
    ++res.pairs_expanded;

    const std::uint32_t t = r1.torso_of[cur.a];
    for (NodeId a2 : neighbors_by_torso(r1, cur.a, t)) {
      if (blocked.contains(ChainId::arm1, cur.a, a2)) continue;
      relax({a2, cur.b}, g1[s] + r1.distance(cur.a, a2), g2[s], s);
    }
    for (NodeId b2 : neighbors_by_torso(r2, cur.b, t)) {
      if (blocked.contains(ChainId::arm2, cur.b, b2)) continue;
      relax({cur.a, b2}, g1[s], g2[s] + r2.distance(cur.b, b2), s);
    }
    const auto nbrs1 = r1.neighbors(cur.a);
    std::size_t gi = 0;
    while (gi < nbrs1.size()) {
      const std::uint32_t t2 = r1.torso_of[nbrs1[gi]];
      std::size_t ge = gi;
      while (ge < nbrs1.size() && r1.torso_of[nbrs1[ge]] == t2) ++ge;
      if (t2 != t) {
        const auto group2 = neighbors_by_torso(r2, cur.b, t2);
        for (std::size_t i = gi; i < ge; ++i) {
          const NodeId a2 = nbrs1[i];
          if (blocked.contains(ChainId::arm1, cur.a, a2)) continue;
          const double ng1 = g1[s] + r1.distance(cur.a, a2);
          for (NodeId b2 : group2) {
            if (blocked.contains(ChainId::arm2, cur.b, b2)) continue;
            relax({a2, b2}, ng1, g2[s] + r2.distance(cur.b, b2), s);
          }
        }
      }
      gi = ge;
    }
  }
  res.status = SearchStatus::no_path;
  return res;
}

// ---------------------------------------------------------------------------
// Leader-follower baseline

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct LeaderSearch {
  std::vector<NodeId> path;
  std::uint64_t expanded = 0;
  bool found = false;
};

// Plain additive A* on one roadmap over mask-valid nodes.
LeaderSearch leader_astar(const Roadmap& r, const ValidityMask& mask,
                          const BlockedEdges& blocked, NodeId start, NodeId goal) {
  LeaderSearch out;
  std::vector<double> g(r.node_count(), kInf);
  std::vector<NodeId> parent(r.node_count(), kInvalidNode);
  struct Entry {
    double f, g;
    NodeId n;
  };
  struct Worse {
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.f != y.f) return x.f > y.f;
      if (x.g != y.g) return x.g < y.g;
      return x.n > y.n;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Worse> queue;
  g[start] = 0.0;
  queue.push({r.distance(start, goal), 0.0, start});
  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    if (e.g != g[e.n]) continue;
    if (e.n == goal) {
      out.found = true;
      NodeId w = goal;
      while (w != kInvalidNode) {
        out.path.push_back(w);
        w = parent[w];
      }
      std::reverse(out.path.begin(), out.path.end());
      return out;
    }
    ++out.expanded;
    for (NodeId n : r.neighbors(e.n)) {
      if (!mask.valid(n)) continue;
      if (blocked.contains(r.meta.chain, e.n, n)) continue;
      const double ng = e.g + r.distance(e.n, n);
      if (ng < g[n]) {
        g[n] = ng;
        parent[n] = e.n;
        queue.push({ng + r.distance(n, goal), ng, n});
      }
    }
  }
  return out;
}

}  // namespace

PlanResult leader_follower_plan(const DualRoadmap& dual, const RobotModel& model,
                                const PlanRequest& request) {
  const PlanOptions& opt = request.options;
  if (!(opt.resolution > 0.0)) throw InputError("resolution must be > 0");
  model.require_within_limits(request.start);
  model.require_within_limits(request.target);
  if (request.occupancy.grid_hash() != dual.r1.meta.grid.spec_hash()) {
    throw CompatibilityError("occupancy grid does not match the roadmap grid");
  }

  const auto t0 = Clock::now();
  const VoxelGrid& grid = dual.r1.meta.grid;
  const Roadmap& r1 = dual.r1;
  const Roadmap& r2 = dual.r2;
  PlanResult res;
  auto finish = [&](PlanStatus status, std::string detail = {}) -> PlanResult& {
    res.status = status;
    res.detail = std::move(detail);
    res.timings.total_s = seconds_since(t0);
    return res;
  };

  {
    const int c = collision_condition(model, request.start, grid, request.occupancy);
    if (c != 0) {
      return finish(PlanStatus::start_in_collision,
                    "start violates condition " + std::to_string(c));
    }
    const int ct = collision_condition(model, request.target, grid, request.occupancy);
    if (ct != 0) {
      return finish(PlanStatus::target_in_collision,
                    "target violates condition " + std::to_string(ct));
    }
  }

  auto t_prune = Clock::now();
  ValidityMask mask1 = build_collision_set(r1, request.occupancy);
  ValidityMask mask2 = build_collision_set(r2, request.occupancy);
  res.timings.prune_s = seconds_since(t_prune);

  auto t_connect = Clock::now();
  auto start_anchor = connect_endpoint(dual, model, mask1, mask2, request.start,
                                       request.occupancy, opt.resolution);
  auto target_anchor = connect_endpoint(dual, model, mask1, mask2, request.target,
                                        request.occupancy, opt.resolution);
  res.timings.connect_s = seconds_since(t_connect);
  if (!start_anchor || !target_anchor) {
    return finish(PlanStatus::no_connectable_node,
                  !start_anchor ? "no connectable anchor pair for start"
                                : "no connectable anchor pair for target");
  }

  BlockedEdges blocked;  // leader edges removed by lazy checking
  const VecX follower_start_arm =
      Eigen::Map<const VecX>(r2.node_arm(start_anchor->pair.b).data(), r2.arm_dof());
  const VecX follower_target_arm =
      Eigen::Map<const VecX>(r2.node_arm(target_anchor->pair.b).data(), r2.arm_dof());

  for (std::uint32_t iteration = 0; iteration < opt.iteration_cap; ++iteration) {
    if (opt.time_budget_s > 0.0 && seconds_since(t0) > opt.time_budget_s) {
      return finish(PlanStatus::budget_exceeded, "time budget exhausted");
    }

    auto t_search = Clock::now();
    LeaderSearch leader = leader_astar(r1, mask1, blocked, start_anchor->pair.a,
                                       target_anchor->pair.a);
    res.timings.search_s += seconds_since(t_search);
    res.search.pairs_expanded += leader.expanded;
    if (!leader.found) {
      return finish(PlanStatus::no_path, "leader roadmap exhausted");
    }

    // Follower: greedy descent toward the straight-line arm2 reference at the
    // leader's torso index, constrained by the masks and inter-arm maps.
    std::vector<NodeId> follower;
    follower.reserve(leader.path.size());
    follower.push_back(start_anchor->pair.b);
    bool stuck = false;
    ChainConfig ref;
    ref.torso.resize(r2.torso_dof());
    ref.arm.resize(r2.arm_dof());
    const std::size_t K = leader.path.size();
    for (std::size_t k = 1; k < K && !stuck; ++k) {
      const std::uint32_t tk = r1.torso_of[leader.path[k]];
      const double frac = K > 1 ? double(k) / double(K - 1) : 1.0;
      const auto trow = r2.torso.row(tk);
      for (std::uint32_t j = 0; j < r2.torso_dof(); ++j) ref.torso[j] = trow[j];
      ref.arm = follower_start_arm + frac * (follower_target_arm - follower_start_arm);

      const NodeId f = follower.back();
      NodeId best = kInvalidNode;
      double best_d = kInf;
      auto consider = [&](NodeId cand) {
        if (!mask2.valid(cand)) return;
        if (dual.inter_contains({leader.path[k], cand})) return;
        const double d = r2.distance(cand, ref);
        if (d < best_d) {
          best_d = d;
          best = cand;
        }
      };
      if (r2.torso_of[f] == tk) consider(f);
      for (NodeId cand : neighbors_by_torso(r2, f, tk)) consider(cand);
      if (best == kInvalidNode) {
        stuck = true;
        break;
      }
      follower.push_back(best);
    }
    // Walk the follower home while the leader parks at its goal node.
    if (!stuck) {
      const NodeId leader_last = leader.path.back();
      const std::uint32_t t_last = r1.torso_of[leader_last];
      std::size_t guard = 0;
      while (follower.back() != target_anchor->pair.b && !stuck) {
        if (++guard > 1000) {
          stuck = true;
          break;
        }
        const NodeId f = follower.back();
        const double here = r2.distance(f, target_anchor->pair.b);
        NodeId best = kInvalidNode;
        double best_d = here;
        for (NodeId cand : neighbors_by_torso(r2, f, t_last)) {
          if (!mask2.valid(cand)) continue;
          if (dual.inter_contains({leader_last, cand})) continue;
          const double d = r2.distance(cand, target_anchor->pair.b);
          if (d < best_d) {
            best_d = d;
            best = cand;
          }
        }
        if (best == kInvalidNode) {
          stuck = true;
          break;
        }
        leader.path.push_back(leader_last);
        follower.push_back(best);
      }
    }
    if (stuck) {
      return finish(PlanStatus::no_path, "follower descent stuck");
    }

    // Compose and verify.
    std::vector<FullConfig> waypoints;
    std::vector<std::int64_t> step_of;
    waypoints.push_back(request.start);
    step_of.push_back(-1);
    for (std::size_t k = 0; k < leader.path.size(); ++k) {
      FullConfig q;
      const auto trow = r2.torso.row(r1.torso_of[leader.path[k]]);
      q.torso = Eigen::Map<const VecX>(trow.data(), trow.size());
      q.arm1 = Eigen::Map<const VecX>(r1.node_arm(leader.path[k]).data(), r1.arm_dof());
      q.arm2 = Eigen::Map<const VecX>(r2.node_arm(follower[k]).data(), r2.arm_dof());
      if (q.torso == waypoints.back().torso && q.arm1 == waypoints.back().arm1 &&
          q.arm2 == waypoints.back().arm2) {
        continue;
      }
      waypoints.push_back(std::move(q));
      step_of.push_back(static_cast<std::int64_t>(k));
    }
    if (!(request.target.torso == waypoints.back().torso &&
          request.target.arm1 == waypoints.back().arm1 &&
          request.target.arm2 == waypoints.back().arm2)) {
      waypoints.push_back(request.target);
      step_of.push_back(-2);
    }

    auto t_check = Clock::now();
    ValidationReport report = validate_trajectory(model, waypoints, grid,
                                                  request.occupancy, opt.resolution);
    res.timings.check_s += seconds_since(t_check);

    if (report.ok) {
      auto t_cut = Clock::now();
      if (opt.shortcut) {
        waypoints = shortcut(model, waypoints, grid, request.occupancy, opt.resolution);
      }
      res.timings.shortcut_s = seconds_since(t_cut);
      Trajectory traj;
      traj.waypoints = std::move(waypoints);
      traj.cost = trajectory_cost(dual, traj.waypoints);
      traj.search = res.search;
      res.timings.total_s = seconds_since(t0);
      traj.timings = res.timings;
      res.trajectory = std::move(traj);
      return finish(PlanStatus::success);
    }

    // Repair: leader edges are blocked, follower nodes are masked.
    const Violation& v = *report.violation;
    const std::int64_t left = step_of[v.segment];
    const std::int64_t right = step_of[v.segment + 1];
    bool progressed = false;
    if (right >= 1) {
      const std::size_t k = static_cast<std::size_t>(right);
      const NodeId lu = leader.path[k - 1], lv = leader.path[k];
      const NodeId fu = follower[k - 1], fv = follower[k];
      if ((v.condition == 2 || v.condition == 4 || v.condition == 1) && lu != lv &&
          !blocked.contains(ChainId::arm1, lu, lv)) {
        blocked.insert(ChainId::arm1, lu, lv);
        progressed = true;
      }
      if (!progressed && (v.condition == 3 || v.condition == 5 || v.condition == 1)) {
        const NodeId blame = fu != fv ? fv : fu;
        if (mask2.valid(blame)) {
          mask2.invalidate(blame);
          progressed = true;
        }
      }
      if (!progressed && lu != lv && !blocked.contains(ChainId::arm1, lu, lv)) {
        blocked.insert(ChainId::arm1, lu, lv);
        progressed = true;
      }
    } else {
      const auto& anchor = left == -1 ? start_anchor : target_anchor;
      if (mask1.valid(anchor->pair.a)) {
        mask1.invalidate(anchor->pair.a);
        progressed = true;
      }
      if (mask2.valid(anchor->pair.b)) {
        mask2.invalidate(anchor->pair.b);
        progressed = true;
      }
    }
    if (!progressed) {
      return finish(PlanStatus::no_path, "repair could not make progress");
    }
    auto anchor_ok = [&](const EndpointAnchor& a) {
      return mask1.valid(a.pair.a) && mask2.valid(a.pair.b);
    };
    if (!anchor_ok(*start_anchor)) {
      start_anchor = connect_endpoint(dual, model, mask1, mask2, request.start,
                                      request.occupancy, opt.resolution);
      if (!start_anchor) {
        return finish(PlanStatus::no_connectable_node,
                      "start anchor invalidated by repair");
      }
    }
    if (!anchor_ok(*target_anchor)) {
      target_anchor = connect_endpoint(dual, model, mask1, mask2, request.target,
                                       request.occupancy, opt.resolution);
      if (!target_anchor) {
        return finish(PlanStatus::no_connectable_node,
                      "target anchor invalidated by repair");
      }
    }
  }
  return finish(PlanStatus::budget_exceeded, "iteration cap reached");
}

}  // namespace dualdrm
