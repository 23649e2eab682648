#include "dualdrm/dual_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <unordered_map>

namespace dualdrm {

namespace {

struct Record {
  double g1, g2;
  std::uint64_t parent;
  bool has_parent;
};

struct QueueEntry {
  double priority;
  double gsum;
  NodeId a, b;
  double g1, g2;
};

// Min-heap order: lowest priority first; ties prefer deeper pairs (larger
// g-sum), then lowest ids, keeping pop order fully deterministic.
struct EntryWorse {
  bool operator()(const QueueEntry& x, const QueueEntry& y) const {
    if (x.priority != y.priority) return x.priority > y.priority;
    if (x.gsum != y.gsum) return x.gsum < y.gsum;
    if (x.a != y.a) return x.a > y.a;
    if (x.b != y.b) return x.b > y.b;
    return x.g1 > y.g1;
  }
};

bool cost_less(double n1, double n2, double o1, double o2) {
  const double nmax = std::max(n1, n2), omax = std::max(o1, o2);
  if (nmax != omax) return nmax < omax;
  return n1 + n2 < o1 + o2;
}

}  // namespace

SearchResult dual_graph_search(const DualRoadmap& dual, const ValidityMask& mask1,
                               const ValidityMask& mask2,
                               const BlockedEdges& blocked, NodePair start,
                               NodePair target, SearchMode mode,
                               const SearchLimits& limits) {
  const Roadmap& r1 = dual.r1;
  const Roadmap& r2 = dual.r2;

  auto check_endpoint = [&](NodePair p, const char* name) {
    if (p.a >= r1.node_count() || p.b >= r2.node_count() ||
        r1.torso_of[p.a] != r2.torso_of[p.b]) {
      throw ContractError(std::string(name) + " pair violates the torso constraint");
    }
    if (pair_in_collision(dual, mask1, mask2, p)) {
      throw ContractError(std::string(name) + " pair is in collision");
    }
  };
  check_endpoint(start, "start");
  check_endpoint(target, "target");

  SearchResult res;
  if (start == target) {
    res.status = SearchStatus::found;
    res.path = {start};
    res.stats.pairs_generated = 1;
    return res;
  }

  const auto t_begin = std::chrono::steady_clock::now();
  auto h1 = [&](NodeId n) { return r1.distance(n, target.a); };
  auto h2 = [&](NodeId n) { return r2.distance(n, target.b); };

  std::unordered_map<std::uint64_t, Record> records;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, EntryWorse> queue;
  SearchStats& stats = res.stats;

  auto push = [&](NodePair p, double g1, double g2) {
    const double f1 = g1 + h1(p.a), f2 = g2 + h2(p.b);
    queue.push({std::max(f1, f2), g1 + g2, p.a, p.b, g1, g2});
    ++stats.pairs_generated;
    stats.queue_peak = std::max<std::uint64_t>(stats.queue_peak, queue.size());
  };

  auto pair_free = [&](NodeId a, NodeId b) {
    return mask1.valid(a) && mask2.valid(b) &&
           !dual.inter_contains(NodePair{a, b});
  };

  auto relax = [&](NodePair p, double ng1, double ng2, std::uint64_t parent) {
    const std::uint64_t k = pair_key(p);
    auto it = records.find(k);
    if (it == records.end()) {
      records.emplace(k, Record{ng1, ng2, parent, true});
      push(p, ng1, ng2);
    } else if (cost_less(ng1, ng2, it->second.g1, it->second.g2)) {
      it->second = Record{ng1, ng2, parent, true};
      push(p, ng1, ng2);
    }
  };

  records.emplace(pair_key(start), Record{0.0, 0.0, 0, false});
  push(start, 0.0, 0.0);

  while (!queue.empty()) {
    if (limits.max_expansions && stats.pairs_expanded >= limits.max_expansions) {
      res.status = SearchStatus::limit_exceeded;
      return res;
    }
    if (limits.time_budget_s > 0.0 && (stats.pairs_expanded & 0xff) == 0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
              .count();
      if (elapsed > limits.time_budget_s) {
        res.status = SearchStatus::limit_exceeded;
        return res;
      }
    }

    const QueueEntry e = queue.top();
    queue.pop();
    const NodePair cur{e.a, e.b};
    const std::uint64_t cur_key = pair_key(cur);
    const Record rec = records.at(cur_key);
    if (rec.g1 != e.g1 || rec.g2 != e.g2) continue;  // stale entry

    if (cur == target) {
      res.status = SearchStatus::found;
      res.cost_max = std::max(rec.g1, rec.g2);
      res.cost_sum = rec.g1 + rec.g2;
      NodePair p = cur;
      Record r = rec;
      while (true) {
        res.path.push_back(p);
        if (!r.has_parent) break;
        p = NodePair{static_cast<NodeId>(r.parent >> 32),
                     static_cast<NodeId>(r.parent & 0xffffffffu)};
        r = records.at(r.parent);
      }
      std::reverse(res.path.begin(), res.path.end());
      return res;
    }

    ++stats.pairs_expanded;
    if (limits.priority_trace) limits.priority_trace->push_back(e.priority);
    const std::uint32_t t = r1.torso_of[cur.a];

    // Single-arm moves at the current torso; the other arm holds still.
    for (NodeId a2 : neighbors_by_torso(r1, cur.a, t)) {
      if (blocked.contains(ChainId::arm1, cur.a, a2)) continue;
      if (!pair_free(a2, cur.b)) continue;
      relax({a2, cur.b}, rec.g1 + r1.distance(cur.a, a2), rec.g2, cur_key);
    }
    for (NodeId b2 : neighbors_by_torso(r2, cur.b, t)) {
      if (blocked.contains(ChainId::arm2, cur.b, b2)) continue;
      if (!pair_free(cur.a, b2)) continue;
      relax({cur.a, b2}, rec.g1, rec.g2 + r2.distance(cur.b, b2), cur_key);
    }

    // Synchronized torso moves: both chains step to the same adjacent torso
    // index. Walk the torso groups of arm1's neighbor list.
    const auto nbrs1 = r1.neighbors(cur.a);
    std::size_t gi = 0;
    while (gi < nbrs1.size()) {
      const std::uint32_t t2 = r1.torso_of[nbrs1[gi]];
      std::size_t ge = gi;
      while (ge < nbrs1.size() && r1.torso_of[nbrs1[ge]] == t2) ++ge;
      if (t2 == t) {
        gi = ge;
        continue;
      }
      const auto group2 = neighbors_by_torso(r2, cur.b, t2);
      if (group2.empty()) {
        gi = ge;
        continue;
      }

      if (mode == SearchMode::exhaustive) {
        for (std::size_t i = gi; i < ge; ++i) {
          const NodeId a2 = nbrs1[i];
          if (blocked.contains(ChainId::arm1, cur.a, a2) || !mask1.valid(a2)) continue;
          const double ng1 = rec.g1 + r1.distance(cur.a, a2);
          for (NodeId b2 : group2) {
            if (blocked.contains(ChainId::arm2, cur.b, b2)) continue;
            if (!mask2.valid(b2) || dual.inter_contains({a2, b2})) continue;
            relax({a2, b2}, ng1, rec.g2 + r2.distance(cur.b, b2), cur_key);
          }
        }
      } else {
        // Pair each moving-arm neighbor with the single lowest-f valid
        // partner of the other arm, for both arm orders.
        for (std::size_t i = gi; i < ge; ++i) {
          const NodeId a2 = nbrs1[i];
          if (blocked.contains(ChainId::arm1, cur.a, a2) || !mask1.valid(a2)) continue;
          NodeId best = kInvalidNode;
          double best_f = 0.0, best_d = 0.0;
          for (NodeId b2 : group2) {
            if (blocked.contains(ChainId::arm2, cur.b, b2)) continue;
            if (!mask2.valid(b2) || dual.inter_contains({a2, b2})) continue;
            const double d = r2.distance(cur.b, b2);
            const double f = rec.g2 + d + h2(b2);
            if (best == kInvalidNode || f < best_f) {
              best = b2;
              best_f = f;
              best_d = d;
            }
          }
          if (best != kInvalidNode) {
            relax({a2, best}, rec.g1 + r1.distance(cur.a, a2), rec.g2 + best_d,
                  cur_key);
          }
        }
        for (NodeId b2 : group2) {
          if (blocked.contains(ChainId::arm2, cur.b, b2) || !mask2.valid(b2)) continue;
          NodeId best = kInvalidNode;
          double best_f = 0.0, best_d = 0.0;
          for (std::size_t i = gi; i < ge; ++i) {
            const NodeId a2 = nbrs1[i];
            if (blocked.contains(ChainId::arm1, cur.a, a2)) continue;
            if (!mask1.valid(a2) || dual.inter_contains({a2, b2})) continue;
            const double d = r1.distance(cur.a, a2);
            const double f = rec.g1 + d + h1(a2);
            if (best == kInvalidNode || f < best_f) {
              best = a2;
              best_f = f;
              best_d = d;
            }
          }
          if (best != kInvalidNode) {
            relax({best, b2}, rec.g1 + best_d, rec.g2 + r2.distance(cur.b, b2),
                  cur_key);
          }
        }
      }
      gi = ge;
    }
  }

  res.status = SearchStatus::no_path;
  return res;
}

}  // namespace dualdrm
