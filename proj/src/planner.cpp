#include "dualdrm/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dualdrm/baselines.hpp"

namespace dualdrm {

const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::success: return "success";
    case PlanStatus::start_in_collision: return "StartInCollision";
    case PlanStatus::target_in_collision: return "TargetInCollision";
    case PlanStatus::no_connectable_node: return "NoConnectableNode";
    case PlanStatus::no_path: return "NoPath";
    case PlanStatus::budget_exceeded: return "BudgetExceeded";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

FullConfig lerp(const FullConfig& a, const FullConfig& b, double s) {
  FullConfig q;
  q.torso = a.torso + s * (b.torso - a.torso);
  q.arm1 = a.arm1 + s * (b.arm1 - a.arm1);
  q.arm2 = a.arm2 + s * (b.arm2 - a.arm2);
  return q;
}

double max_joint_delta(const FullConfig& a, const FullConfig& b) {
  double m = 0.0;
  m = std::max(m, (a.torso - b.torso).cwiseAbs().maxCoeff());
  m = std::max(m, (a.arm1 - b.arm1).cwiseAbs().maxCoeff());
  m = std::max(m, (a.arm2 - b.arm2).cwiseAbs().maxCoeff());
  return m;
}

bool configs_equal(const FullConfig& a, const FullConfig& b) {
  return a.torso == b.torso && a.arm1 == b.arm1 && a.arm2 == b.arm2;
}

/// Dense per-segment checker sharing one collision kernel across samples.
class SegmentChecker {
public:
  SegmentChecker(const RobotModel& model, const VoxelGrid& grid,
                 const OccupancySet& occupancy, double resolution)
      : kernel_(model, 0.0), grid_(grid), occupancy_(occupancy),
        resolution_(resolution) {}

  int condition_at(const FullConfig& q) {
    kernel_.set_config(q);
    if (kernel_.arms_collide()) return 1;
    if (kernel_.self_collision(ChainId::arm1)) return 2;
    if (kernel_.self_collision(ChainId::arm2)) return 3;
    if (kernel_.voxel_hit_active(ChainId::arm1, grid_, occupancy_)) return 4;
    if (kernel_.voxel_hit_active(ChainId::arm2, grid_, occupancy_)) return 5;
    return 0;
  }

  /// First violating sample of segment a->b, endpoints included.
  std::optional<std::pair<double, int>> check_segment(const FullConfig& a,
                                                      const FullConfig& b) {
    const double delta = max_joint_delta(a, b);
    const std::uint64_t steps =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                       std::ceil(delta / resolution_ - 1e-12)));
    for (std::uint64_t k = 0; k <= steps; ++k) {
      const double s = double(k) / double(steps);
      const int c = condition_at(lerp(a, b, s));
      if (c != 0) return std::make_pair(s, c);
    }
    return std::nullopt;
  }

private:
  CollisionKernel kernel_;
  const VoxelGrid& grid_;
  const OccupancySet& occupancy_;
  double resolution_;
};

}  // namespace

ValidationReport validate_trajectory(const RobotModel& model,
                                     const std::vector<FullConfig>& waypoints,
                                     const VoxelGrid& grid,
                                     const OccupancySet& occupancy,
                                     double resolution) {
  if (waypoints.empty()) throw InputError("trajectory has no waypoints");
  if (!(resolution > 0.0)) throw InputError("resolution must be > 0");

  SegmentChecker checker(model, grid, occupancy, resolution);
  ValidationReport report;
  if (waypoints.size() == 1) {
    const int c = checker.condition_at(waypoints[0]);
    if (c != 0) {
      report.ok = false;
      report.violation = Violation{0, 0.0, c, waypoints[0]};
    }
    return report;
  }
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    if (auto v = checker.check_segment(waypoints[i], waypoints[i + 1])) {
      report.ok = false;
      report.violation =
          Violation{i, v->first, v->second, lerp(waypoints[i], waypoints[i + 1], v->first)};
      return report;
    }
  }
  return report;
}

std::vector<FullConfig> shortcut(const RobotModel& model,
                                 const std::vector<FullConfig>& waypoints,
                                 const VoxelGrid& grid,
                                 const OccupancySet& occupancy,
                                 double resolution) {
  std::vector<FullConfig> path = waypoints;
  if (path.size() < 3) return path;
  SegmentChecker checker(model, grid, occupancy, resolution);

  bool improved = true;
  while (improved && path.size() >= 3) {
    improved = false;
    for (std::size_t len = path.size() - 1; len >= 2 && !improved; --len) {
      for (std::size_t i = 0; i + len < path.size(); ++i) {
        if (!checker.check_segment(path[i], path[i + len])) {
          path.erase(path.begin() + i + 1, path.begin() + i + len);
          improved = true;
          break;
        }
      }
    }
  }
  return path;
}

double full_distance(const DualRoadmap& dual, const FullConfig& a,
                     const FullConfig& b) {
  const auto& tw = dual.r1.meta.torso_weights;
  const auto& w1 = dual.r1.meta.arm_weights;
  const auto& w2 = dual.r2.meta.arm_weights;
  double s = 0.0;
  for (std::size_t j = 0; j < tw.size(); ++j) {
    const double d = a.torso[j] - b.torso[j];
    s += tw[j] * d * d;
  }
  for (std::size_t j = 0; j < w1.size(); ++j) {
    const double d = a.arm1[j] - b.arm1[j];
    s += w1[j] * d * d;
  }
  for (std::size_t j = 0; j < w2.size(); ++j) {
    const double d = a.arm2[j] - b.arm2[j];
    s += w2[j] * d * d;
  }
  return std::sqrt(s);
}

double trajectory_cost(const DualRoadmap& dual,
                       const std::vector<FullConfig>& waypoints) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    c += full_distance(dual, waypoints[i], waypoints[i + 1]);
  }
  return c;
}

namespace {

using Anchor = EndpointAnchor;

std::optional<Anchor> find_anchor(const DualRoadmap& dual,
                                  const ValidityMask& mask1,
                                  const ValidityMask& mask2,
                                  const FullConfig& q, SegmentChecker& checker) {
  const Roadmap& r1 = dual.r1;
  const Roadmap& r2 = dual.r2;

  std::vector<std::pair<double, std::uint32_t>> torso_order;
  torso_order.reserve(dual.torso_count());
  for (std::uint32_t t = 0; t < dual.torso_count(); ++t) {
    torso_order.emplace_back(r1.torso_distance(t, q.torso), t);
  }
  std::sort(torso_order.begin(), torso_order.end());

  const ChainConfig c1 = project(q, ChainId::arm1);
  const ChainConfig c2 = project(q, ChainId::arm2);
  constexpr std::size_t kMaxDenseChecksPerTorso = 64;
  constexpr std::size_t kMaxPartnersPerNode = 8;

  std::vector<std::pair<double, NodeId>> as, bs;
  for (const auto& [td, t] : torso_order) {
    as.clear();
    bs.clear();
    const auto [a0, a1] = r1.torso_node_range(t);
    for (NodeId a = a0; a < a1; ++a) {
      if (mask1.valid(a)) as.emplace_back(r1.distance(a, c1), a);
    }
    if (as.empty()) continue;
    const auto [b0, b1] = r2.torso_node_range(t);
    for (NodeId b = b0; b < b1; ++b) {
      if (mask2.valid(b)) bs.emplace_back(r2.distance(b, c2), b);
    }
    if (bs.empty()) continue;
    std::sort(as.begin(), as.end());
    std::sort(bs.begin(), bs.end());

    std::size_t dense_checks = 0;
    for (const auto& [da, a] : as) {
      std::size_t partners = 0;
      for (const auto& [db, b] : bs) {
        if (dual.inter_contains({a, b})) continue;
        if (++partners > kMaxPartnersPerNode) break;
        const NodePair pair{a, b};
        FullConfig anchor_cfg = compose(dual, pair);
        if (++dense_checks > kMaxDenseChecksPerTorso) break;
        if (!checker.check_segment(q, anchor_cfg)) {
          return Anchor{pair, std::move(anchor_cfg)};
        }
      }
      if (dense_checks > kMaxDenseChecksPerTorso) break;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<EndpointAnchor> connect_endpoint(const DualRoadmap& dual,
                                               const RobotModel& model,
                                               const ValidityMask& mask1,
                                               const ValidityMask& mask2,
                                               const FullConfig& q,
                                               const OccupancySet& occupancy,
                                               double resolution) {
  SegmentChecker checker(model, dual.r1.meta.grid, occupancy, resolution);
  return find_anchor(dual, mask1, mask2, q, checker);
}

PlanResult plan(const DualRoadmap& dual, const RobotModel& model,
                const PlanRequest& request) {
  const PlanOptions& opt = request.options;
  if (!(opt.resolution > 0.0)) throw InputError("resolution must be > 0");
  if (opt.iteration_cap < 1) throw InputError("iteration cap must be >= 1");
  model.require_within_limits(request.start);
  model.require_within_limits(request.target);
  if (request.occupancy.grid_hash() != dual.r1.meta.grid.spec_hash()) {
    throw CompatibilityError("occupancy grid does not match the roadmap grid");
  }

  const auto t0 = Clock::now();
  PlanResult res;
  const VoxelGrid& grid = dual.r1.meta.grid;
  auto finish = [&](PlanStatus status, std::string detail = {}) -> PlanResult& {
    res.status = status;
    res.detail = std::move(detail);
    res.timings.total_s = seconds_since(t0);
    return res;
  };

  SegmentChecker checker(model, grid, request.occupancy, opt.resolution);
  {
    const int c = checker.condition_at(request.start);
    if (c != 0) {
      return finish(PlanStatus::start_in_collision,
                    "start violates condition " + std::to_string(c));
    }
  }
  {
    const int c = checker.condition_at(request.target);
    if (c != 0) {
      return finish(PlanStatus::target_in_collision,
                    "target violates condition " + std::to_string(c));
    }
  }

  // Prune: per-query node masks from the voxel collision maps.
  auto t_prune = Clock::now();
  ValidityMask mask1 = build_collision_set(dual.r1, request.occupancy);
  ValidityMask mask2 = build_collision_set(dual.r2, request.occupancy);
  res.timings.prune_s = seconds_since(t_prune);

  // Connect both endpoints to anchor pairs.
  auto t_connect = Clock::now();
  std::optional<Anchor> start_anchor =
      find_anchor(dual, mask1, mask2, request.start, checker);
  std::optional<Anchor> target_anchor =
      find_anchor(dual, mask1, mask2, request.target, checker);
  res.timings.connect_s = seconds_since(t_connect);
  if (!start_anchor || !target_anchor) {
    return finish(PlanStatus::no_connectable_node,
                  !start_anchor ? "no connectable anchor pair for start"
                                : "no connectable anchor pair for target");
  }

  BlockedEdges blocked;
  SearchMode mode = opt.restricted_retries > 0 || !opt.allow_exhaustive
                        ? SearchMode::restricted
                        : SearchMode::exhaustive;
  std::uint32_t restricted_failures = 0;
  auto escalate = [&]() {
    if (mode == SearchMode::restricted && opt.allow_exhaustive) {
      mode = SearchMode::exhaustive;
      res.search.fallback_used = true;
      return true;
    }
    return false;
  };

  for (std::uint32_t iteration = 0; iteration < opt.iteration_cap; ++iteration) {
    if (opt.time_budget_s > 0.0 && seconds_since(t0) > opt.time_budget_s) {
      return finish(PlanStatus::budget_exceeded, "time budget exhausted");
    }

    SearchLimits limits;
    limits.max_expansions = opt.max_expansions;
    if (opt.time_budget_s > 0.0) {
      limits.time_budget_s =
          std::max(1e-3, opt.time_budget_s - seconds_since(t0));
    }

    auto t_search = Clock::now();
    SearchResult sr;
    if (opt.backend == SearchBackend::product_oracle) {
      ProductResult pr = product_astar(dual, mask1, mask2, blocked,
                                       start_anchor->pair, target_anchor->pair,
                                       opt.product_budget);
      sr.status = pr.status;
      sr.path = std::move(pr.path);
      sr.cost_max = pr.cost_max;
      sr.cost_sum = pr.cost_sum;
      sr.stats.pairs_expanded = pr.pairs_expanded;
      sr.stats.pairs_generated = pr.pair_slots;
      mode = SearchMode::exhaustive;  // the oracle is complete; never escalate
    } else {
      sr = dual_graph_search(dual, mask1, mask2, blocked, start_anchor->pair,
                             target_anchor->pair, mode, limits);
    }
    res.timings.search_s += seconds_since(t_search);
    res.search.accumulate(sr.stats);

    if (sr.status == SearchStatus::limit_exceeded) {
      return finish(PlanStatus::budget_exceeded, "search budget exhausted");
    }
    if (sr.status == SearchStatus::no_path) {
      if (escalate()) continue;
      return finish(PlanStatus::no_path,
                    mode == SearchMode::exhaustive
                        ? "composed graph exhausted"
                        : "restricted search exhausted");
    }

    // Compose. pair_of[i] tags waypoint i with its path index, -1 for the
    // off-graph endpoints.
    std::vector<FullConfig> waypoints;
    std::vector<std::int64_t> pair_of;
    waypoints.push_back(request.start);
    pair_of.push_back(-1);
    for (std::size_t i = 0; i < sr.path.size(); ++i) {
      FullConfig q = compose(dual, sr.path[i]);
      if (configs_equal(q, waypoints.back())) continue;
      waypoints.push_back(std::move(q));
      pair_of.push_back(static_cast<std::int64_t>(i));
    }
    if (!configs_equal(request.target, waypoints.back())) {
      waypoints.push_back(request.target);
      pair_of.push_back(-2);
    }

    auto t_check = Clock::now();
    ValidationReport report =
        validate_trajectory(model, waypoints, grid, request.occupancy, opt.resolution);
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

    // Repair: blame the offending edge or node, then search again.
    const Violation& v = *report.violation;
    const std::int64_t left = pair_of[v.segment];
    const std::int64_t right = pair_of[v.segment + 1];
    bool progressed = false;

    auto mask_node = [&](ChainId chain, NodeId n) {
      auto& mask = chain == ChainId::arm1 ? mask1 : mask2;
      if (mask.valid(n)) {
        mask.invalidate(n);
        progressed = true;
      }
    };
    auto block_moved_edges = [&](const NodePair& p, const NodePair& q,
                                 int condition) {
      const bool arm1_moved = p.a != q.a;
      const bool arm2_moved = p.b != q.b;
      auto block = [&](ChainId c, NodeId u, NodeId vv) {
        if (!blocked.contains(c, u, vv)) {
          blocked.insert(c, u, vv);
          progressed = true;
        }
      };
      if (condition == 2 || condition == 4) {
        if (arm1_moved) block(ChainId::arm1, p.a, q.a);
        else if (arm2_moved) block(ChainId::arm2, p.b, q.b);
      } else if (condition == 3 || condition == 5) {
        if (arm2_moved) block(ChainId::arm2, p.b, q.b);
        else if (arm1_moved) block(ChainId::arm1, p.a, q.a);
      } else {  // inter-arm mid-edge: both motions are implicated
        if (arm1_moved) block(ChainId::arm1, p.a, q.a);
        if (arm2_moved) block(ChainId::arm2, p.b, q.b);
      }
    };

    // A deduplicated on-grid start leaves the first transition tagged as
    // (-1, k>=1); blame it as the roadmap transition it is.
    const bool is_transition = (left >= 0 && right >= 0) || (left == -1 && right >= 1);
    if (is_transition) {
      const NodePair p = sr.path[left >= 0 ? left : right - 1];
      const NodePair q = sr.path[right];
      const bool near_start = v.s <= opt.node_blame_fraction;
      const bool near_end = v.s >= 1.0 - opt.node_blame_fraction;
      if ((near_start || near_end) && v.condition >= 2) {
        const NodePair& blamed = near_start ? p : q;
        if (v.condition == 2 || v.condition == 4) {
          mask_node(ChainId::arm1, blamed.a);
        } else {
          mask_node(ChainId::arm2, blamed.b);
        }
      }
      if (!progressed) block_moved_edges(p, q, v.condition);
    } else {
      // An approach segment failed; invalidate that endpoint's anchor pair
      // and reconnect.
      const Anchor& anchor = left == -1 ? *start_anchor : *target_anchor;
      mask_node(ChainId::arm1, anchor.pair.a);
      mask_node(ChainId::arm2, anchor.pair.b);
    }

    if (!progressed) {
      return finish(PlanStatus::no_path, "repair could not make progress");
    }

    // Re-anchor when a masked node was part of an anchor pair.
    auto anchor_ok = [&](const Anchor& a) {
      return mask1.valid(a.pair.a) && mask2.valid(a.pair.b);
    };
    if (!anchor_ok(*start_anchor)) {
      start_anchor = find_anchor(dual, mask1, mask2, request.start, checker);
      if (!start_anchor) {
        return finish(PlanStatus::no_connectable_node,
                      "start anchor invalidated by repair");
      }
    }
    if (!anchor_ok(*target_anchor)) {
      target_anchor = find_anchor(dual, mask1, mask2, request.target, checker);
      if (!target_anchor) {
        return finish(PlanStatus::no_connectable_node,
                      "target anchor invalidated by repair");
      }
    }

    if (mode == SearchMode::restricted) {
      if (++restricted_failures >= opt.restricted_retries) escalate();
    }
  }
  return finish(PlanStatus::budget_exceeded, "iteration cap reached");
}

}  // namespace dualdrm
