#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshrelay/behavior.hpp"
#include "meshrelay/mesh.hpp"
#include "meshrelay/nsb.hpp"
#include "meshrelay/rng.hpp"
#include "meshrelay/scenario.hpp"
#include "meshrelay/unicycle.hpp"
#include "meshrelay/world.hpp"

namespace meshrelay {

/// Synchronous discrete-time engine. One step() call advances every node by
/// dt through a fixed stage order: link graph, routing, gossip, path query,
/// help delivery, behaviour selection, prioritized velocity composition with
/// reactive obstacle injection, vehicle tracking and integration, packet
/// relay, bookkeeping. Identical scenario and seed give identical runs.

struct PacketOutcome {
  std::uint64_t seq = 0;
  Tick created_tick = 0;
  bool delivered = false;
  std::optional<DropReason> drop_reason;
  std::optional<NodeId> dropped_at;
  std::vector<NodeId> hop_trace;
};

/// One node's row for the tick: pose at the start of the tick, behaviour
/// decided during it.
struct NodeStep {
  NodeId id;
  NodeRole role = NodeRole::Support;
  UnicyclePose pose;
  std::string mode;
  bool on_path = false;
  std::optional<NodeId> predecessor;
  std::optional<NodeId> successor;
  std::vector<TaskKind> tasks;
};

struct StepLog {
  Tick tick = 0;
  std::vector<NodeStep> nodes;
  std::optional<PacketOutcome> packet;
  bool topology_changed = false;
};

struct Metrics {
  Tick ticks = 0;
  std::int64_t packets_sent = 0;
  std::int64_t packets_delivered = 0;
  std::int64_t packets_dropped = 0;
  std::map<DropReason, std::int64_t> drops_by_reason;
  std::vector<Tick> topology_change_ticks;
  std::vector<Tick> drop_ticks;
  std::int64_t disconnected_ticks = 0;  // agent table had no base entry
  std::int64_t navigate_ticks = 0;
  std::int64_t halt_ticks = 0;
  std::int64_t backtrack_ticks = 0;
  std::int64_t free_to_onpath = 0;
  std::int64_t help_requests = 0;
  double max_step_displacement_m = 0.0;
  double min_wall_clearance_m = std::numeric_limits<double>::infinity();
  double max_route_distance_m = 0.0;  // agent's along-route distance from base

  double delivery_ratio() const {
    return packets_sent == 0
               ? 1.0
               : static_cast<double>(packets_delivered) / static_cast<double>(packets_sent);
  }
};

class Sim {
 public:
  explicit Sim(const Scenario& sc)
      : sc_(sc),
        world_{sc.walls, sc.bounds},
        rng_(sc.seed),
        base_id_{0},
        agent_id_{static_cast<std::int32_t>(sc.supports.size() + 1)} {
    poses_.push_back({sc.base_position, 0.0});
    for (const SupportSpawn& s : sc.supports) poses_.push_back({s.start, s.heading});
    poses_.push_back({sc.agent_start, sc.agent_heading});
    support_states_.resize(sc.supports.size());

    consts_.base_pos = sc.base_position;
    consts_.base_id = base_id_;
    consts_.agent_id = agent_id_;
    consts_.r_max = sc.range_m;
    consts_.alpha_stretch = sc.alpha_stretch;
    consts_.capture_radius = sc.capture_radius_m;
    consts_.help_cooldown_s = sc.help_cooldown_s;
    consts_.t_backtrack_s = sc.backtrack_after_s;
    consts_.dt = sc.dt_s;
    consts_.strategy = sc.free_strategy;
    consts_.gain_distance = sc.gain_distance;
    consts_.gain_goal = sc.gain_goal;
    consts_.gain_equal_distance = sc.gain_equal_distance;

    limits_ = {sc.v_max_mps, sc.omega_max_radps, sc.heading_gain};

    build_route_spine();
    last_graph_ = build_link_graph(positions(), sc_.range_m, world_.walls, sc_.los);
    routing_ = RoutingState(last_graph_, 0);
  }

  std::size_t node_count() const { return poses_.size(); }
  NodeId base_id() const { return base_id_; }
  NodeId agent_id() const { return agent_id_; }
  Tick tick() const { return tick_; }
  const Scenario& scenario() const { return sc_; }
  const World& world() const { return world_; }
  const Metrics& metrics() const { return metrics_; }
  const RoutingState& routing() const { return routing_; }
  const LinkGraph& graph() const { return last_graph_; }
  const std::optional<std::vector<NodeId>>& path() const { return path_; }
  const std::vector<NeighborSnapshot>& snapshots() const { return snapshots_; }
  const UnicyclePose& pose(NodeId id) const { return poses_[static_cast<std::size_t>(id.v)]; }
  const AgentState& agent_state() const { return agent_state_; }
  const SupportState& support_state(NodeId id) const {
    return support_states_[static_cast<std::size_t>(id.v) - 1];
  }

  std::vector<Vec2> positions() const {
    std::vector<Vec2> out;
    out.reserve(poses_.size());
    for (const auto& p : poses_) out.push_back(p.position);
    return out;
  }

  StepLog step() {
    const Tick now = tick_;
    StepLog log;
    log.tick = now;
    const std::vector<UnicyclePose> start_poses = poses_;
    const std::vector<Vec2> pos = positions();
    const std::size_t n = poses_.size();

    LinkGraph graph = build_link_graph(pos, sc_.range_m, world_.walls, sc_.los);
    if (!(graph == last_graph_)) {
      metrics_.topology_change_ticks.push_back(now);
      log.topology_changed = true;
      last_graph_ = graph;
    }

    routing_.tick(graph, now, sc_.route_convergence_s, sc_.dt_s);
    const std::vector<RoutingTable>& tables = routing_.tables();

    snapshots_ = gossip_positions(pos, graph, now);
    if (sc_.position_noise_sigma_m > 0.0) {
      for (auto& snap : snapshots_) {
        for (NeighborReport& r : snap) {
          r.pos.x += rng_.next_normal() * sc_.position_noise_sigma_m;
          r.pos.y += rng_.next_normal() * sc_.position_noise_sigma_m;
        }
      }
    }

    path_ = current_path(agent_id_, base_id_, tables, graph);
    std::optional<std::span<const NodeId>> path_view;
    if (path_) path_view = std::span<const NodeId>(*path_);

    const std::size_t ai = static_cast<std::size_t>(agent_id_.v);
    AgentInputs agent_in{now, pos[ai], &tables[ai], &snapshots_[ai]};
    AgentDecision agent_dec =
        agent_step(agent_state_, agent_in, std::span<const Vec2>(sc_.waypoints), consts_);

    // A request is a one-shot broadcast: heard for a single tick, then gone.
    // Holding requests longer lets robots chase positions the chain has
    // already moved past, which starves the spots that still need filling.
    std::erase_if(pending_help_,
                  [&](const HelpRequest& h) { return now - h.issue_tick > 1; });

    std::vector<HelpRequest> issued;
    std::vector<SupportState> next_states(support_states_.size());
    std::vector<std::vector<TaskRequest>> requests(n);
    requests[ai] = agent_dec.tasks;

    for (std::size_t s = 0; s < support_states_.size(); ++s) {
      const NodeId id{static_cast<std::int32_t>(s + 1)};
      const std::size_t i = static_cast<std::size_t>(id.v);
      const std::vector<NodeId> nbrs = graph.neighbors(id);
      std::vector<HelpRequest> inbox;
      for (const HelpRequest& h : pending_help_) {
        if (h.requester != id && std::find(nbrs.begin(), nbrs.end(), h.requester) != nbrs.end()) {
          inbox.push_back(h);
        }
      }
      SupportInputs in{now, id, pos[i], &tables[i], &snapshots_[i], path_view,
                       std::span<const HelpRequest>(inbox)};
      SupportDecision dec = support_step(support_states_[s], in, consts_);
      if (support_states_[s].mode == SupportModeKind::Free &&
          dec.state.mode == SupportModeKind::OnPath) {
        ++metrics_.free_to_onpath;
      }
      const bool adopted =
          dec.state.mode == SupportModeKind::Helping &&
          (support_states_[s].mode != SupportModeKind::Helping ||
           dec.state.help_target != support_states_[s].help_target);
      if (adopted) {
        // One helper per request: remove the entry accept_help chose, which
        // is the oldest in the inbox with ties toward the lowest requester.
        const HelpRequest* chosen = nullptr;
        for (const HelpRequest& h : inbox) {
          if (chosen == nullptr || h.issue_tick < chosen->issue_tick ||
              (h.issue_tick == chosen->issue_tick && h.requester < chosen->requester)) {
            chosen = &h;
          }
        }
        if (chosen != nullptr) {
          std::erase_if(pending_help_, [&](const HelpRequest& h) {
            return h.requester == chosen->requester && h.issue_tick == chosen->issue_tick;
          });
        }
      }
      if (dec.help) {
        issued.push_back(*dec.help);
        ++metrics_.help_requests;
      }
      next_states[s] = dec.state;
      requests[i] = std::move(dec.tasks);
    }
    for (const HelpRequest& h : issued) {
      std::erase_if(pending_help_,
                    [&](const HelpRequest& p) { return p.requester == h.requester; });
      pending_help_.push_back(h);
    }

    std::vector<Vec2> v_des(n, Vec2{});
    for (std::size_t i = 1; i < n; ++i) {
      v_des[i] = guard_wall_clearance(pos[i], compose_with_avoidance(i, pos, requests[i]));
    }

    log.nodes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      NodeStep row;
      row.id = NodeId{static_cast<std::int32_t>(i)};
      row.role = i == 0 ? NodeRole::Base : (i == ai ? NodeRole::Agent : NodeRole::Support);
      row.pose = start_poses[i];
      row.on_path = path_ && std::find(path_->begin(), path_->end(), row.id) != path_->end();
      if (i == 0) {
        row.mode = "static";
      } else if (i == ai) {
        row.mode = to_string(agent_dec.state.mode);
      } else {
        const SupportState& st = next_states[i - 1];
        row.mode = to_string(st.mode);
        row.predecessor = st.predecessor;
        row.successor = st.successor;
      }
      for (const TaskRequest& r : requests[i]) row.tasks.push_back(r.kind);
      log.nodes.push_back(std::move(row));
    }

    for (std::size_t i = 1; i < n; ++i) {
      const UnicycleCommand cmd = unicycle_track(poses_[i], v_des[i], limits_);
      UnicyclePose next = integrate(poses_[i], cmd.u, cmd.omega, sc_.dt_s);
      // Heading lag can drag a turning robot into a wall the velocity guard
      // already rejected. Hold forward motion while the step still closes on
      // a wall inside the hold-off band; rotation continues so the robot can
      // turn out and resume.
      if (!world_.walls.empty()) {
        const double hold_off = 0.7 * sc_.obstacle_safe_m;
        for (const Segment& w : world_.walls) {
          const double d_now = distance(poses_[i].position, closest_point_on_segment(w, poses_[i].position));
          const double d_next = distance(next.position, closest_point_on_segment(w, next.position));
          if (d_now < hold_off && d_next < d_now) {
            next = integrate(poses_[i], 0.0, cmd.omega, sc_.dt_s);
            break;
          }
        }
      }
      metrics_.max_step_displacement_m =
          std::max(metrics_.max_step_displacement_m, distance(poses_[i].position, next.position));
      if (!world_.walls.empty()) {
        metrics_.min_wall_clearance_m =
            std::min(metrics_.min_wall_clearance_m, nearest_wall_distance(world_, next.position));
      }
      poses_[i] = next;
    }

    const bool agent_has_route = tables[ai].find(base_id_) != nullptr;
    if (agent_has_route) {
      const RelayResult rr = relay_packet(agent_id_, base_id_, tables, graph);
      PacketOutcome po;
      po.seq = next_seq_++;
      po.created_tick = now;
      po.delivered = rr.delivered;
      po.drop_reason = rr.drop_reason;
      po.dropped_at = rr.dropped_at;
      po.hop_trace = rr.hop_trace;
      ++metrics_.packets_sent;
      if (rr.delivered) {
        ++metrics_.packets_delivered;
      } else {
        ++metrics_.packets_dropped;
        ++metrics_.drops_by_reason[*rr.drop_reason];
        metrics_.drop_ticks.push_back(now);
      }
      log.packet = std::move(po);
    } else {
      ++metrics_.disconnected_ticks;
    }

    switch (agent_dec.state.mode) {
      case AgentModeKind::Navigate: ++metrics_.navigate_ticks; break;
      case AgentModeKind::Halt: ++metrics_.halt_ticks; break;
      case AgentModeKind::Backtrack: ++metrics_.backtrack_ticks; break;
    }
    metrics_.max_route_distance_m =
        std::max(metrics_.max_route_distance_m, route_distance(poses_[ai].position));

    agent_state_ = agent_dec.state;
    support_states_ = std::move(next_states);
    metrics_.ticks = ++tick_;
    return log;
  }

  /// Along-route distance from the base to the projection of p onto the
  /// route spine (base, agent start, then waypoints up to the first revisit).
  double route_distance(Vec2 p) const {
    double best_d = std::numeric_limits<double>::infinity();
    double best_arc = 0.0;
    double arc = 0.0;
    for (std::size_t i = 0; i + 1 < spine_.size(); ++i) {
      const Segment seg{spine_[i], spine_[i + 1]};
      const Vec2 cp = closest_point_on_segment(seg, p);
      const double d = distance(p, cp);
      if (d < best_d) {
        best_d = d;
        best_arc = arc + distance(seg.a, cp);
      }
      arc += distance(seg.a, seg.b);
    }
    return best_arc;
  }

 private:
  void build_route_spine() {
    spine_.push_back(sc_.base_position);
    if (!(sc_.agent_start == sc_.base_position)) spine_.push_back(sc_.agent_start);
    for (const Vec2& w : sc_.waypoints) {
      bool revisit = false;
      for (const Vec2& v : spine_) {
        if (v == w) revisit = true;
      }
      if (revisit) break;
      spine_.push_back(w);
    }
  }

  /// Reflex layer under the behavioural controller: strips any velocity
  /// component that still closes on a wall lying inside the safe distance.
  /// The scan feeds the controller only the single nearest obstacle, so a
  /// robot crowded by another robot could otherwise be walked into a wall.
  Vec2 guard_wall_clearance(Vec2 p, Vec2 v) const {
    for (int pass = 0; pass < 4; ++pass) {
      bool clipped = false;
      for (const Segment& w : world_.walls) {
        const Vec2 cp = closest_point_on_segment(w, p);
        const double d = distance(p, cp);
        if (d >= sc_.obstacle_safe_m || d <= 1e-9) continue;
        const Vec2 n{(cp.x - p.x) / d, (cp.y - p.y) / d};
        const double c = dot(v, n);
        if (c > 1e-12) {
          v.x -= c * n.x;
          v.y -= c * n.y;
          clipped = true;
        }
      }
      if (!clipped) break;
    }
    return v;
  }

  /// Composes the requested tasks, then re-composes with a top-priority
  /// avoidance task when the tentative velocity heads into a nearby scan hit.
  Vec2 compose_with_avoidance(std::size_t i, const std::vector<Vec2>& pos,
                              std::vector<TaskRequest>& reqs) {
    auto velocity_of = [&](const std::vector<TaskRequest>& rs) -> Vec2 {
      if (rs.empty()) return {};
      std::vector<TaskEval> evals;
      evals.reserve(rs.size());
      for (const TaskRequest& r : rs) evals.push_back(eval_task(r, pos[i]));
      return compose(evals, sc_.damping, sc_.v_max_mps);
    };
    try {
      const Vec2 tentative = velocity_of(reqs);
      std::vector<Vec2> others;
      others.reserve(pos.size() - 1);
      for (std::size_t j = 0; j < pos.size(); ++j) {
        if (j != i) others.push_back(pos[j]);
      }
      const auto hit = lrf_scan(poses_[i], world_, others, sc_.lrf_range_m);
      if (!hit || !obstacle_active(pos[i], tentative, hit->point, sc_.obstacle_trigger_m)) {
        return tentative;
      }
      reqs.insert(reqs.begin(), TaskRequest{TaskKind::ObstacleAvoid, hit->point, {},
                                            sc_.obstacle_safe_m, sc_.gain_distance});
      return velocity_of(reqs);
    } catch (const DegeneratePosition&) {
      return {};  // no defined direction this tick, hold still
    }
  }

  Scenario sc_;
  World world_;
  DetRng rng_;
  NodeId base_id_;
  NodeId agent_id_;
  std::vector<UnicyclePose> poses_;
  std::vector<SupportState> support_states_;
  AgentState agent_state_;
  BehaviorConstants consts_;
  VelocityLimits limits_;
  std::vector<Vec2> spine_;
  LinkGraph last_graph_;
  RoutingState routing_;
  std::vector<NeighborSnapshot> snapshots_;
  std::optional<std::vector<NodeId>> path_;
  std::vector<HelpRequest> pending_help_;
  std::uint64_t next_seq_ = 0;
  Tick tick_ = 0;
  Metrics metrics_;
};

}  // namespace meshrelay
