#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "meshrelay/mesh.hpp"
#include "meshrelay/nsb.hpp"

namespace meshrelay {

/// Per-robot behaviour selection from strictly local information: own pose,
/// own routing table, one-hop neighbor reports, received help requests and
/// the static scenario constants. Nothing here may look at global state.

enum class SupportModeKind { OnPath, Free, LostPredecessor, Helping };
enum class AgentModeKind { Navigate, Halt, Backtrack };
enum class FreeStrategy { BaseFirstNode, FirstHops };

inline const char* to_string(SupportModeKind m) {
  switch (m) {
    case SupportModeKind::OnPath: return "on_path";
    case SupportModeKind::Free: return "free";
    case SupportModeKind::LostPredecessor: return "lost_predecessor";
    case SupportModeKind::Helping: return "helping";
  }
  return "?";
}

inline const char* to_string(AgentModeKind m) {
  switch (m) {
    case AgentModeKind::Navigate: return "navigate";
    case AgentModeKind::Halt: return "halt";
    case AgentModeKind::Backtrack: return "backtrack";
  }
  return "?";
}

/// Plea from a strained path robot: some free robot should move to the
/// midpoint between the requester and its overstretched path neighbor.
struct HelpRequest {
  NodeId requester;
  Vec2 midpoint{};
  Tick issue_tick = 0;
};

struct TimedPos {
  Vec2 pos{};
  Tick tick = 0;
};

/// Mutable per-support-robot memory.
struct SupportState {
  SupportModeKind mode = SupportModeKind::Free;
  std::optional<NodeId> predecessor;                 // next path node toward base
  std::optional<NodeId> successor;                   // next path node toward agent
  std::optional<Vec2> last_known_predecessor_pos;
  std::optional<Vec2> help_target;
  std::map<NodeId, TimedPos> known_positions;        // last report per node ever heard
  Tick last_help_issued = -1;
  bool help_ever_issued = false;
};

/// Mutable agent memory.
struct AgentState {
  AgentModeKind mode = AgentModeKind::Navigate;
  std::size_t waypoint_index = 0;
  std::optional<Tick> halt_started;
  std::optional<TimedPos> last_first_hop_pos;        // toward base, while connected
  std::map<NodeId, TimedPos> known_positions;
};

/// Scenario constants every robot knows.
struct BehaviorConstants {
  Vec2 base_pos{};
  NodeId base_id;
  NodeId agent_id;
  double r_max = 20.0;
  double alpha_stretch = 0.8;
  double capture_radius = 0.3;
  double help_cooldown_s = 5.0;
  double t_backtrack_s = 10.0;
  double dt = 0.1;
  FreeStrategy strategy = FreeStrategy::BaseFirstNode;
  double gain_distance = 0.5;
  double gain_goal = 0.5;
  double gain_equal_distance = 0.5;
};

/// Local view handed to one support robot for one tick.
struct SupportInputs {
  Tick now = 0;
  NodeId self;
  Vec2 own_pos{};
  const RoutingTable* table = nullptr;
  const NeighborSnapshot* snapshot = nullptr;
  std::optional<std::span<const NodeId>> path;  // agent..base hop sequence
  std::span<const HelpRequest> inbox;
};

struct SupportDecision {
  SupportState state;
  std::vector<TaskRequest> tasks;
  std::optional<HelpRequest> help;
};

namespace detail {

inline void remember_neighbors(std::map<NodeId, TimedPos>& memory, const NeighborSnapshot& snap) {
  for (const NeighborReport& r : snap) memory[r.id] = {r.pos, r.tick};
}

/// Position of a referenced node: fresh one-hop report when available,
/// otherwise the last value learned while it was a neighbor. The base
/// station is fixed infrastructure and always resolvable.
inline std::optional<Vec2> resolve_position(NodeId id, const NeighborSnapshot& snap,
                                            const std::map<NodeId, TimedPos>& memory,
                                            const BehaviorConstants& c) {
  if (id == c.base_id) return c.base_pos;
  if (const NeighborReport* r = find_report(snap, id)) return r->pos;
  auto it = memory.find(id);
  if (it != memory.end()) return it->second.pos;
  return std::nullopt;
}

inline bool route_to_base_exists(const RoutingTable* table, const BehaviorConstants& c) {
  return table != nullptr && table->find(c.base_id) != nullptr;
}

}  // namespace detail

/// Path-membership classification for one support robot.
/// OnPath when the robot appears strictly between agent and base, with the
/// adjacent path nodes recorded; OnPath decays to LostPredecessor when the
/// predecessor left the one-hop set and the base became unreachable.
inline SupportState classify(const SupportState& prev, const SupportInputs& in,
                             const BehaviorConstants& c) {
  SupportState st = prev;
  detail::remember_neighbors(st.known_positions, *in.snapshot);

  std::optional<std::size_t> path_index;
  if (in.path) {
    const auto& p = *in.path;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      if (p[i] == in.self) path_index = i;
    }
  }

  if (path_index) {
    const auto& p = *in.path;
    st.mode = SupportModeKind::OnPath;
    st.predecessor = p[*path_index + 1];  // toward base
    st.successor = p[*path_index - 1];    // toward agent
    st.help_target.reset();
    if (auto pos = detail::resolve_position(*st.predecessor, *in.snapshot, st.known_positions, c)) {
      st.last_known_predecessor_pos = pos;
    }
    return st;
  }

  const bool base_reachable = detail::route_to_base_exists(in.table, c);

  if (prev.mode == SupportModeKind::OnPath) {
    const bool pred_is_neighbor =
        prev.predecessor && find_report(*in.snapshot, *prev.predecessor) != nullptr;
    if (!pred_is_neighbor && !base_reachable && prev.last_known_predecessor_pos) {
      st.mode = SupportModeKind::LostPredecessor;
      st.predecessor.reset();
      st.successor.reset();
      return st;
    }
  }

  if (prev.mode == SupportModeKind::LostPredecessor && !base_reachable) {
    return st;  // keep chasing the last known position
  }

  if (prev.mode == SupportModeKind::Helping && prev.help_target) {
    if (distance(in.own_pos, *prev.help_target) > c.capture_radius) {
      st.mode = SupportModeKind::Helping;
      st.predecessor.reset();
      st.successor.reset();
      return st;
    }
  }

  st.mode = SupportModeKind::Free;
  st.predecessor.reset();
  st.successor.reset();
  st.help_target.reset();
  return st;
}

/// Tasks for a path member: stay on the bisector of predecessor and
/// successor. When either link stretches past alpha_stretch * r_max, ask
/// nearby free robots to fill the midpoint (rate limited by the cooldown).
inline std::pair<std::vector<TaskRequest>, std::optional<HelpRequest>> tasks_on_path(
    const SupportState& st, const SupportInputs& in, const BehaviorConstants& c) {
  std::vector<TaskRequest> tasks;
  std::optional<HelpRequest> help;
  if (!st.predecessor || !st.successor) return {tasks, help};

  const auto pred_pos =
      detail::resolve_position(*st.predecessor, *in.snapshot, st.known_positions, c);
  const auto succ_pos =
      detail::resolve_position(*st.successor, *in.snapshot, st.known_positions, c);
  if (!pred_pos || !succ_pos) return {tasks, help};

  tasks.push_back({TaskKind::EqualDistance, *pred_pos, *succ_pos, 0.0, c.gain_equal_distance});

  const double strain_limit = c.alpha_stretch * c.r_max;
  Vec2 strained{};
  bool strained_found = false;
  const double d_pred = distance(in.own_pos, *pred_pos);
  const double d_succ = distance(in.own_pos, *succ_pos);
  if (d_pred > strain_limit) {
    strained = *pred_pos;
    strained_found = true;
  }
  if (d_succ > strain_limit && (!strained_found || d_succ >= d_pred)) {
    strained = *succ_pos;
    strained_found = true;
  }
  if (strained_found) {
    const bool cooled =
        !st.help_ever_issued ||
        static_cast<double>(in.now - st.last_help_issued) * c.dt >= c.help_cooldown_s;
    if (cooled) help = HelpRequest{in.self, midpoint(in.own_pos, strained), in.now};
  }
  return {tasks, help};
}

/// Task for a robot that lost its predecessor: head to where it was last seen.
inline std::vector<TaskRequest> tasks_lost(const SupportState& st, const BehaviorConstants& c) {
  std::vector<TaskRequest> tasks;
  if (st.last_known_predecessor_pos) {
    tasks.push_back({TaskKind::MoveToGoal, *st.last_known_predecessor_pos, {}, 0.0, c.gain_goal});
  }
  return tasks;
}

/// Tasks for an off-path but connected robot: hold the bisector of the two
/// staging references given by the configured strategy. With no route to the
/// base the robot holds position.
inline std::vector<TaskRequest> tasks_free(const SupportState& st, const SupportInputs& in,
                                           const BehaviorConstants& c) {
  std::vector<TaskRequest> tasks;
  if (!detail::route_to_base_exists(in.table, c)) return tasks;

  std::optional<Vec2> ref1, ref2;
  if (c.strategy == FreeStrategy::BaseFirstNode) {
    if (!in.path || in.path->size() < 2) return tasks;
    const NodeId first_node = (*in.path)[in.path->size() - 2];  // path node adjacent to base
    ref1 = c.base_pos;
    ref2 = detail::resolve_position(first_node, *in.snapshot, st.known_positions, c);
  } else {
    const RouteEntry* toward_base = in.table->find(c.base_id);
    const RouteEntry* toward_agent = in.table->find(c.agent_id);
    if (toward_base == nullptr || toward_agent == nullptr) return tasks;
    ref1 = detail::resolve_position(toward_base->next_hop, *in.snapshot, st.known_positions, c);
    ref2 = detail::resolve_position(toward_agent->next_hop, *in.snapshot, st.known_positions, c);
  }
  if (!ref1 || !ref2) return tasks;
  if (*ref1 == *ref2) return tasks;  // references coincide, bisector undefined
  tasks.push_back({TaskKind::EqualDistance, *ref1, *ref2, 0.0, c.gain_equal_distance});
  return tasks;
}

/// Adoption rule for received help requests: only free robots respond, the
/// oldest pending request wins, ties break toward the lowest requester id.
inline SupportState accept_help(const SupportState& st, std::span<const HelpRequest> requests,
                                const BehaviorConstants&) {
  if (st.mode != SupportModeKind::Free || requests.empty()) return st;
  const HelpRequest* chosen = &requests[0];
  for (const HelpRequest& r : requests.subspan(1)) {
    if (r.issue_tick < chosen->issue_tick ||
        (r.issue_tick == chosen->issue_tick && r.requester < chosen->requester)) {
      chosen = &r;
    }
  }
  SupportState next = st;
  next.mode = SupportModeKind::Helping;
  next.help_target = chosen->midpoint;
  return next;
}

/// Full per-tick support step: classify, adopt help, emit tasks.
inline SupportDecision support_step(const SupportState& prev, const SupportInputs& in,
                                    const BehaviorConstants& c) {
  SupportDecision out;
  out.state = classify(prev, in, c);
  out.state = accept_help(out.state, in.inbox, c);

  switch (out.state.mode) {
    case SupportModeKind::OnPath: {
      auto [tasks, help] = tasks_on_path(out.state, in, c);
      out.tasks = std::move(tasks);
      out.help = help;
      if (out.help) {
        out.state.last_help_issued = in.now;
        out.state.help_ever_issued = true;
      }
      break;
    }
    case SupportModeKind::LostPredecessor:
      out.tasks = tasks_lost(out.state, c);
      break;
    case SupportModeKind::Free:
      out.tasks = tasks_free(out.state, in, c);
      break;
    case SupportModeKind::Helping:
      if (out.state.help_target) {
        out.tasks.push_back({TaskKind::MoveToGoal, *out.state.help_target, {}, 0.0, c.gain_goal});
      }
      break;
  }
  return out;
}

/// Local view handed to the agent for one tick.
struct AgentInputs {
  Tick now = 0;
  Vec2 own_pos{};
  const RoutingTable* table = nullptr;
  const NeighborSnapshot* snapshot = nullptr;
};

struct AgentDecision {
  AgentState state;
  std::vector<TaskRequest> tasks;
};

/// Waypoint tracking with the connectivity-loss policy: halt as soon as the
/// route to base disappears, backtrack toward the last known first-hop
/// position when the outage persists for t_backtrack seconds, and resume at
/// the same waypoint once the route returns.
inline AgentDecision agent_step(const AgentState& prev, const AgentInputs& in,
                                std::span<const Vec2> waypoints, const BehaviorConstants& c) {
  AgentDecision out;
  out.state = prev;
  detail::remember_neighbors(out.state.known_positions, *in.snapshot);

  const bool connected = detail::route_to_base_exists(in.table, c);
  if (connected) {
    const RouteEntry* e = in.table->find(c.base_id);
    if (auto pos = detail::resolve_position(e->next_hop, *in.snapshot,
                                            out.state.known_positions, c)) {
      out.state.last_first_hop_pos = TimedPos{*pos, in.now};
    }
    out.state.mode = AgentModeKind::Navigate;
    out.state.halt_started.reset();
  } else {
    switch (prev.mode) {
      case AgentModeKind::Navigate:
        out.state.mode = AgentModeKind::Halt;
        out.state.halt_started = in.now;
        break;
      case AgentModeKind::Halt: {
        const double waited = static_cast<double>(in.now - *prev.halt_started) * c.dt;
        if (waited >= c.t_backtrack_s) out.state.mode = AgentModeKind::Backtrack;
        break;
      }
      case AgentModeKind::Backtrack:
        break;
    }
  }

  if (out.state.mode == AgentModeKind::Navigate) {
    if (out.state.waypoint_index < waypoints.size() &&
        distance(in.own_pos, waypoints[out.state.waypoint_index]) <= c.capture_radius) {
      ++out.state.waypoint_index;
    }
    if (out.state.waypoint_index < waypoints.size()) {
      out.tasks.push_back(
          {TaskKind::MoveToGoal, waypoints[out.state.waypoint_index], {}, 0.0, c.gain_goal});
    }
  } else if (out.state.mode == AgentModeKind::Backtrack) {
    if (out.state.last_first_hop_pos) {
      out.tasks.push_back(
          {TaskKind::MoveToGoal, out.state.last_first_hop_pos->pos, {}, 0.0, c.gain_goal});
    }
  }
  return out;
}

}  // namespace meshrelay
