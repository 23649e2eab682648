#pragma once

#include <unordered_set>
#include <vector>

#include "dualdrm/dual_roadmap.hpp"

namespace dualdrm {

/// Edges removed by lazy collision checking, per chain, undirected.
class BlockedEdges {
public:
  void insert(ChainId c, NodeId u, NodeId v) { set_.insert(key(c, u, v)); }
  bool contains(ChainId c, NodeId u, NodeId v) const {
    return set_.count(key(c, u, v)) != 0;
  }
  std::size_t size() const { return set_.size(); }

private:
  static std::uint64_t key(ChainId c, NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (std::uint64_t(c == ChainId::arm2) << 63) | (std::uint64_t(u) << 31) | v;
  }
  std::unordered_set<std::uint64_t> set_;
};

enum class SearchMode {
  /// Alg.-2 pairing: each moving-arm neighbor is paired with the single
  /// lowest-priority torso-compatible partner (the held node for same-torso
  /// moves). Fast, incomplete.
  restricted,
  /// All torso-compatible neighbor pairs; complete on the masked composed
  /// graph.
  exhaustive,
};

struct SearchLimits {
  std::uint64_t max_expansions = 0;  // 0 = unlimited
  double time_budget_s = 0.0;        // 0 = unlimited
  // when set, receives the priority of every processed expansion (test hook)
  std::vector<double>* priority_trace = nullptr;
};

struct SearchStats {
  std::uint64_t pairs_expanded = 0;
  std::uint64_t pairs_generated = 0;
  std::uint64_t queue_peak = 0;
  bool fallback_used = false;

  void accumulate(const SearchStats& o) {
    pairs_expanded += o.pairs_expanded;
    pairs_generated += o.pairs_generated;
    queue_peak = std::max(queue_peak, o.queue_peak);
    fallback_used = fallback_used || o.fallback_used;
  }
};

enum class SearchStatus { found, no_path, limit_exceeded };

struct SearchResult {
  SearchStatus status = SearchStatus::no_path;
  std::vector<NodePair> path;  // start..target when found
  double cost_max = 0.0;       // max(g1, g2) at the target
  double cost_sum = 0.0;
  SearchStats stats;
};

/// A* over the implicit composed graph of same-torso pairs.
///
/// Transitions are single-arm moves at fixed torso or synchronized torso
/// moves of both chains. Per-arm costs g1/g2 accumulate chain-metric edge
/// lengths; a pair's priority is max(g_i + h_i) with the per-arm distance to
/// the target node as heuristic. Pairs are re-queued when a path with
/// strictly smaller (max(g1,g2), g1+g2) is found. Every generated pair
/// passes the inter-arm map and both masks, so any returned path is
/// node-collision-free by construction.
SearchResult dual_graph_search(const DualRoadmap& dual, const ValidityMask& mask1,
                               const ValidityMask& mask2,
                               const BlockedEdges& blocked, NodePair start,
                               NodePair target, SearchMode mode,
                               const SearchLimits& limits = {});

}  // namespace dualdrm
