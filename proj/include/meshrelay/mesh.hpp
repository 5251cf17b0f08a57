#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "meshrelay/geometry.hpp"

namespace meshrelay {

using Tick = std::int64_t;

enum class NodeRole : std::uint8_t { Base, Agent, Support };

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Base: return "base";
    case NodeRole::Agent: return "agent";
    case NodeRole::Support: return "support";
  }
  return "?";
}

/// Dense node identifier, unique within a scenario.
struct NodeId {
  std::int32_t v = -1;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// Symmetric disc-model connectivity graph without self loops.
/// edge(u,v) holds iff |p_u - p_v| <= r_max, and, when line-of-sight checking
/// is on, the sight line crosses no wall.
class LinkGraph {
 public:
  LinkGraph() = default;
  explicit LinkGraph(std::size_t n) : n_(n), adj_(n * n, 0) {}

  std::size_t size() const { return n_; }

  bool linked(NodeId a, NodeId b) const {
    if (a == b) return false;
    return adj_[static_cast<std::size_t>(a.v) * n_ + static_cast<std::size_t>(b.v)] != 0;
  }

  void set_link(NodeId a, NodeId b, bool on) {
    if (a == b) return;
    adj_[static_cast<std::size_t>(a.v) * n_ + static_cast<std::size_t>(b.v)] = on ? 1 : 0;
    adj_[static_cast<std::size_t>(b.v) * n_ + static_cast<std::size_t>(a.v)] = on ? 1 : 0;
  }

  /// One-hop neighbors in ascending id order.
  std::vector<NodeId> neighbors(NodeId a) const {
    std::vector<NodeId> out;
    for (std::size_t j = 0; j < n_; ++j) {
      const NodeId b{static_cast<std::int32_t>(j)};
      if (linked(a, b)) out.push_back(b);
    }
    return out;
  }

  friend bool operator==(const LinkGraph&, const LinkGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adj_;
};

inline LinkGraph build_link_graph(std::span<const Vec2> positions, double r_max,
                                  std::span<const Segment> walls, bool los_enabled) {
  const std::size_t n = positions.size();
  LinkGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(positions[i], positions[j]) > r_max) continue;
      bool clear = true;
      if (los_enabled) {
        for (const Segment& w : walls) {
          if (segments_intersect(positions[i], positions[j], w.a, w.b)) {
            clear = false;
            break;
          }
        }
      }
      if (clear) {
        g.set_link(NodeId{static_cast<std::int32_t>(i)}, NodeId{static_cast<std::int32_t>(j)}, true);
      }
    }
  }
  return g;
}

struct RouteEntry {
  NodeId next_hop;
  int hop_count = 0;
  friend constexpr bool operator==(const RouteEntry&, const RouteEntry&) = default;
};

/// Per-node forwarding table: destination -> first hop and hop count.
/// Unreachable destinations have no entry.
struct RoutingTable {
  NodeId owner;
  std::map<NodeId, RouteEntry> entries;
  Tick epoch = 0;

  const RouteEntry* find(NodeId dest) const {
    auto it = entries.find(dest);
    return it == entries.end() ? nullptr : &it->second;
  }
};

/// Shortest-hop tables by breadth-first search from every node. Neighbors are
/// expanded in ascending id order, which resolves equal-hop ties toward the
/// lowest first-hop id.
inline std::vector<RoutingTable> compute_tables(const LinkGraph& g) {
  const std::size_t n = g.size();
  std::vector<RoutingTable> tables(n);
  for (std::size_t s = 0; s < n; ++s) {
    const NodeId src{static_cast<std::int32_t>(s)};
    RoutingTable& t = tables[s];
    t.owner = src;
    std::vector<int> dist(n, -1);
    std::vector<NodeId> first_hop(n);
    std::deque<NodeId> queue;
    dist[s] = 0;
    queue.push_back(src);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : g.neighbors(u)) {
        if (dist[v.v] != -1) continue;
        dist[v.v] = dist[u.v] + 1;
        first_hop[v.v] = (u == src) ? v : first_hop[u.v];
        queue.push_back(v);
      }
    }
    for (std::size_t d = 0; d < n; ++d) {
      if (d == s || dist[d] < 0) continue;
      t.entries.emplace(NodeId{static_cast<std::int32_t>(d)}, RouteEntry{first_hop[d], dist[d]});
    }
  }
  return tables;
}

/// Routing tables plus the convergence-latency model: after any topology
/// change every table stays stale until the graph has been stable for
/// tau_route seconds, then all tables refresh together. Construction assumes
/// an already-converged network on the initial graph.
class RoutingState {
 public:
  RoutingState() = default;

  explicit RoutingState(const LinkGraph& initial, Tick now = 0)
      : tables_(compute_tables(initial)), last_graph_(initial), last_change_(now) {
    for (auto& t : tables_) t.epoch = now;
    epoch_ = now;
  }

  /// Advances the model one tick against the current graph.
  void tick(const LinkGraph& graph, Tick now, double tau_route, double dt) {
    if (!(graph == last_graph_)) {
      last_change_ = now;
      last_graph_ = graph;
    }
    const double stable_for = static_cast<double>(now - last_change_) * dt;
    const bool due = (tau_route == 0.0) || (stable_for >= tau_route);
    if (due && epoch_ < last_change_) {
      tables_ = compute_tables(graph);
      for (auto& t : tables_) t.epoch = now;
      epoch_ = now;
    }
  }

  const std::vector<RoutingTable>& tables() const { return tables_; }
  Tick last_change_tick() const { return last_change_; }
  Tick epoch() const { return epoch_; }

 private:
  std::vector<RoutingTable> tables_;
  LinkGraph last_graph_;
  Tick last_change_ = 0;
  Tick epoch_ = 0;
};

enum class DropReason { NoRoute, LinkDown, TtlExceeded };

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::NoRoute: return "no_route";
    case DropReason::LinkDown: return "link_down";
    case DropReason::TtlExceeded: return "ttl_exceeded";
  }
  return "?";
}

/// Identified datagram walking the relay chain.
struct Packet {
  std::uint64_t seq = 0;
  NodeId src;
  NodeId dst;
  Tick created_tick = 0;
  std::optional<Tick> delivered_tick;
  std::vector<NodeId> hop_trace;
};

struct RelayResult {
  bool delivered = false;
  std::vector<NodeId> hop_trace;                // starts at src, ends where the walk stopped
  std::optional<DropReason> drop_reason;
  std::optional<NodeId> dropped_at;
};

/// Store-and-forward walk of next_hop pointers from src to dst within one
/// tick. Each hop requires a table entry and a live physical link; the walk
/// aborts after more hops than the node count, which guards against loops
/// while tables are converging.
inline RelayResult relay_packet(NodeId src, NodeId dst,
                                std::span<const RoutingTable> tables,
                                const LinkGraph& graph) {
  RelayResult res;
  res.hop_trace.push_back(src);
  NodeId cur = src;
  const std::size_t max_hops = graph.size();
  while (cur != dst) {
    const RouteEntry* e = tables[static_cast<std::size_t>(cur.v)].find(dst);
    if (e == nullptr) {
      res.drop_reason = DropReason::NoRoute;
      res.dropped_at = cur;
      return res;
    }
    if (!graph.linked(cur, e->next_hop)) {
      res.drop_reason = DropReason::LinkDown;
      res.dropped_at = cur;
      return res;
    }
    cur = e->next_hop;
    res.hop_trace.push_back(cur);
    if (res.hop_trace.size() - 1 > max_hops) {
      res.drop_reason = DropReason::TtlExceeded;
      res.dropped_at = cur;
      return res;
    }
  }
  res.delivered = true;
  return res;
}

/// Position report received from a one-hop neighbor.
struct NeighborReport {
  NodeId id;
  Vec2 pos;
  Tick tick = 0;
};

/// Reports from exactly the one-hop neighbors, ascending id.
using NeighborSnapshot = std::vector<NeighborReport>;

inline std::vector<NeighborSnapshot> gossip_positions(std::span<const Vec2> positions,
                                                      const LinkGraph& graph, Tick now) {
  std::vector<NeighborSnapshot> out(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (NodeId nb : graph.neighbors(NodeId{static_cast<std::int32_t>(i)})) {
      out[i].push_back({nb, positions[static_cast<std::size_t>(nb.v)], now});
    }
  }
  return out;
}

inline const NeighborReport* find_report(const NeighborSnapshot& snap, NodeId id) {
  for (const auto& r : snap) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

/// Hop sequence a packet from agent to base would take right now, or nullopt
/// when undeliverable. A support robot is "on the path" when it appears
/// strictly between the two endpoints.
inline std::optional<std::vector<NodeId>> current_path(NodeId agent, NodeId base,
                                                       std::span<const RoutingTable> tables,
                                                       const LinkGraph& graph) {
  const RelayResult r = relay_packet(agent, base, tables, graph);
  if (!r.delivered) return std::nullopt;
  return r.hop_trace;
}

}  // namespace meshrelay
