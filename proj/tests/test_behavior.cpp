#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "meshrelay/behavior.hpp"

using namespace meshrelay;

namespace {

NodeId id(int v) { return NodeId{static_cast<std::int32_t>(v)}; }

BehaviorConstants constants() {
  BehaviorConstants c;
  c.base_pos = {0.0, 0.0};
  c.base_id = id(0);
  c.agent_id = id(3);
  c.r_max = 20.0;
  c.alpha_stretch = 0.8;
  c.capture_radius = 0.3;
  c.help_cooldown_s = 5.0;
  c.t_backtrack_s = 10.0;
  c.dt = 0.1;
  return c;
}

RoutingTable make_table(int owner, std::vector<std::tuple<int, int, int>> rows) {
  RoutingTable t;
  t.owner = id(owner);
  for (auto [dest, next, hops] : rows) t.entries[id(dest)] = RouteEntry{id(next), hops};
  return t;
}

NeighborSnapshot snap(std::vector<std::pair<int, Vec2>> reports, Tick tick = 0) {
  NeighborSnapshot s;
  for (auto& [i, pos] : reports) s.push_back({id(i), pos, tick});
  return s;
}

}  // namespace

TEST_CASE("classification from the current path") {
  const auto c = constants();
  const std::vector<NodeId> path{id(3), id(2), id(1), id(0)};

  SECTION("interior node becomes on-path with both neighbors recorded") {
    const auto s = snap({{1, {10, 0}}, {3, {30, 0}}});
    const auto table = make_table(2, {{0, 1, 2}, {3, 3, 1}});
    SupportInputs in{5, id(2), {20, 0}, &table, &s,
                     std::span<const NodeId>(path), {}};
    const SupportState st = classify(SupportState{}, in, c);
    CHECK(st.mode == SupportModeKind::OnPath);
    REQUIRE(st.predecessor.has_value());
    REQUIRE(st.successor.has_value());
    CHECK(*st.predecessor == id(1));  // toward base
    CHECK(*st.successor == id(3));    // toward agent
    REQUIRE(st.last_known_predecessor_pos.has_value());
    CHECK(*st.last_known_predecessor_pos == Vec2{10, 0});
  }

  SECTION("node adjacent to base has the base as predecessor") {
    const auto s = snap({{2, {20, 0}}});
    const auto table = make_table(1, {{0, 0, 1}});
    SupportInputs in{5, id(1), {10, 0}, &table, &s,
                     std::span<const NodeId>(path), {}};
    const SupportState st = classify(SupportState{}, in, c);
    CHECK(st.mode == SupportModeKind::OnPath);
    CHECK(*st.predecessor == id(0));
    // base position is always resolvable even without a report
    CHECK(*st.last_known_predecessor_pos == c.base_pos);
  }

  SECTION("node not appearing in the path is free") {
    const std::vector<NodeId> direct{id(3), id(0)};
    const auto s = snap({});
    const auto table = make_table(2, {{0, 0, 1}});
    SupportInputs in{5, id(2), {20, 0}, &table, &s,
                     std::span<const NodeId>(direct), {}};
    CHECK(classify(SupportState{}, in, c).mode == SupportModeKind::Free);
  }
}

TEST_CASE("losing the predecessor and the base route at once") {
  const auto c = constants();
  SupportState prev;
  prev.mode = SupportModeKind::OnPath;
  prev.predecessor = id(1);
  prev.successor = id(3);
  prev.last_known_predecessor_pos = Vec2{10, 0};

  SECTION("base unreachable and predecessor gone means lost") {
    const auto s = snap({{3, {30, 0}}});
    RoutingTable empty;
    empty.owner = id(2);
    SupportInputs in{9, id(2), {20, 0}, &empty, &s, std::nullopt, {}};
    const SupportState st = classify(prev, in, c);
    CHECK(st.mode == SupportModeKind::LostPredecessor);
    CHECK(*st.last_known_predecessor_pos == Vec2{10, 0});
  }

  SECTION("still reaching the base keeps the robot free instead") {
    const auto s = snap({{3, {30, 0}}});
    const auto table = make_table(2, {{0, 3, 4}});
    SupportInputs in{9, id(2), {20, 0}, &table, &s, std::nullopt, {}};
    CHECK(classify(prev, in, c).mode == SupportModeKind::Free);
  }

  SECTION("predecessor still in range keeps the robot free") {
    const auto s = snap({{1, {10, 0}}});
    RoutingTable empty;
    empty.owner = id(2);
    SupportInputs in{9, id(2), {20, 0}, &empty, &s, std::nullopt, {}};
    CHECK(classify(prev, in, c).mode == SupportModeKind::Free);
  }

  SECTION("lost state persists while the base stays unreachable") {
    SupportState lost;
    lost.mode = SupportModeKind::LostPredecessor;
    lost.last_known_predecessor_pos = Vec2{10, 0};
    const auto s = snap({});
    RoutingTable empty;
    empty.owner = id(2);
    SupportInputs in{12, id(2), {18, 0}, &empty, &s, std::nullopt, {}};
    CHECK(classify(lost, in, c).mode == SupportModeKind::LostPredecessor);

    const auto table = make_table(2, {{0, 1, 2}});
    SupportInputs back{13, id(2), {18, 0}, &table, &s, std::nullopt, {}};
    CHECK(classify(lost, back, c).mode == SupportModeKind::Free);
  }
}

TEST_CASE("helping persists until the target is captured") {
  const auto c = constants();
  SupportState helping;
  helping.mode = SupportModeKind::Helping;
  helping.help_target = Vec2{10, 10};
  const auto s = snap({});
  const auto table = make_table(2, {{0, 1, 2}});

  SupportInputs far{3, id(2), {0, 0}, &table, &s, std::nullopt, {}};
  CHECK(classify(helping, far, c).mode == SupportModeKind::Helping);

  SupportInputs close{4, id(2), {10.0, 9.8}, &table, &s, std::nullopt, {}};
  const SupportState done = classify(helping, close, c);
  CHECK(done.mode == SupportModeKind::Free);
  CHECK_FALSE(done.help_target.has_value());
}

TEST_CASE("on-path task keeps equal distance to both neighbors") {
  auto c = constants();
  c.gain_equal_distance = 0.5;
  SupportState st;
  st.mode = SupportModeKind::OnPath;
  st.predecessor = id(1);
  st.successor = id(3);
  const auto s = snap({{1, {0, 0}}, {3, {10, 0}}});
  const auto table = make_table(2, {{0, 1, 1}});
  SupportInputs in{7, id(2), {3, 0}, &table, &s, std::nullopt, {}};

  auto [tasks, help] = tasks_on_path(st, in, c);
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].kind == TaskKind::EqualDistance);
  CHECK(tasks[0].p1 == Vec2{0, 0});
  CHECK(tasks[0].p2 == Vec2{10, 0});
  CHECK(tasks[0].gain == 0.5);
  CHECK_FALSE(help.has_value());

  // sanity: the induced velocity points toward the midpoint
  const TaskEval e = eval_task(tasks[0], in.own_pos);
  const Vec2 v = task_velocity(e, 0.0);
  CHECK(v.x > 0.0);
  CHECK(v.y == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("help is requested for an overstretched link") {
  const auto c = constants();  // threshold 0.8 * 20 = 16
  SupportState st;
  st.mode = SupportModeKind::OnPath;
  st.predecessor = id(1);
  st.successor = id(3);

  SECTION("stretched predecessor link raises a request at its midpoint") {
    const auto s = snap({{1, {17, 0}}, {3, {-2, 0}}});
    const auto table = make_table(2, {{0, 1, 1}});
    SupportInputs in{40, id(2), {0, 0}, &table, &s, std::nullopt, {}};
    auto [tasks, help] = tasks_on_path(st, in, c);
    REQUIRE(help.has_value());
    CHECK(help->requester == id(2));
    CHECK(help->issue_tick == 40);
    CHECK(help->midpoint == Vec2{8.5, 0});
  }

  SECTION("the farther of two strained links wins") {
    const auto s = snap({{1, {17, 0}}, {3, {-18, 0}}});
    const auto table = make_table(2, {{0, 1, 1}});
    SupportInputs in{40, id(2), {0, 0}, &table, &s, std::nullopt, {}};
    auto [tasks, help] = tasks_on_path(st, in, c);
    REQUIRE(help.has_value());
    CHECK(help->midpoint == Vec2{-9, 0});
  }

  SECTION("requests respect the cooldown") {
    auto strained = st;
    strained.help_ever_issued = true;
    const auto s = snap({{1, {17, 0}}, {3, {-2, 0}}});
    const auto table = make_table(2, {{0, 1, 1}});

    strained.last_help_issued = 60;
    SupportInputs early{100, id(2), {0, 0}, &table, &s, std::nullopt, {}};  // 4 s later
    CHECK_FALSE(std::get<1>(tasks_on_path(strained, early, c)).has_value());

    SupportInputs late{110, id(2), {0, 0}, &table, &s, std::nullopt, {}};  // 5 s later
    CHECK(std::get<1>(tasks_on_path(strained, late, c)).has_value());
  }

  SECTION("links inside the threshold raise nothing") {
    const auto s = snap({{1, {15, 0}}, {3, {-15, 0}}});
    const auto table = make_table(2, {{0, 1, 1}});
    SupportInputs in{40, id(2), {0, 0}, &table, &s, std::nullopt, {}};
    CHECK_FALSE(std::get<1>(tasks_on_path(st, in, c)).has_value());
  }
}

TEST_CASE("lost robots head for the last known predecessor position") {
  const auto c = constants();
  SupportState st;
  st.mode = SupportModeKind::LostPredecessor;
  st.last_known_predecessor_pos = Vec2{4, 5};
  const auto tasks = tasks_lost(st, c);
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].kind == TaskKind::MoveToGoal);
  CHECK(tasks[0].p1 == Vec2{4, 5});
}

TEST_CASE("free staging between the base and the first path node") {
  auto c = constants();
  c.strategy = FreeStrategy::BaseFirstNode;
  SupportState st;

  SECTION("direct agent-base path stages between the endpoints") {
    const std::vector<NodeId> path{id(3), id(0)};
    const auto s = snap({{3, {6, 0}}});
    const auto table = make_table(2, {{0, 0, 1}, {3, 3, 1}});
    SupportInputs in{3, id(2), {4, 0}, &table, &s, std::span<const NodeId>(path), {}};
    const auto tasks = tasks_free(st, in, c);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].kind == TaskKind::EqualDistance);
    CHECK(tasks[0].p1 == c.base_pos);
    CHECK(tasks[0].p2 == Vec2{6, 0});
  }

  SECTION("longer path stages against the node adjacent to the base") {
    const std::vector<NodeId> path{id(3), id(1), id(0)};
    const auto s = snap({{1, {12, 1}}});
    const auto table = make_table(2, {{0, 1, 2}});
    SupportInputs in{3, id(2), {4, 0}, &table, &s, std::span<const NodeId>(path), {}};
    const auto tasks = tasks_free(st, in, c);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].p2 == Vec2{12, 1});
  }

  SECTION("no route to base means hold position") {
    RoutingTable empty;
    empty.owner = id(2);
    const auto s = snap({});
    SupportInputs in{3, id(2), {4, 0}, &empty, &s, std::nullopt, {}};
    CHECK(tasks_free(st, in, c).empty());
  }

  SECTION("no known path means hold position") {
    const auto s = snap({});
    const auto table = make_table(2, {{0, 0, 1}});
    SupportInputs in{3, id(2), {4, 0}, &table, &s, std::nullopt, {}};
    CHECK(tasks_free(st, in, c).empty());
  }
}

TEST_CASE("free staging between the two first hops") {
  auto c = constants();
  c.strategy = FreeStrategy::FirstHops;
  SupportState st;

  SECTION("distinct hops give their bisector") {
    const auto s = snap({{1, {10, 0}}, {4, {20, 2}}});
    auto table = make_table(2, {{0, 1, 2}});
    table.entries[c.agent_id] = RouteEntry{id(4), 2};
    SupportInputs in{3, id(2), {15, 0}, &table, &s, std::nullopt, {}};
    const auto tasks = tasks_free(st, in, c);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].kind == TaskKind::EqualDistance);
    CHECK(tasks[0].p1 == Vec2{10, 0});
    CHECK(tasks[0].p2 == Vec2{20, 2});
  }

  SECTION("identical hops give no direction") {
    const auto s = snap({{1, {10, 0}}});
    auto table = make_table(2, {{0, 1, 2}});
    table.entries[c.agent_id] = RouteEntry{id(1), 3};
    SupportInputs in{3, id(2), {15, 0}, &table, &s, std::nullopt, {}};
    CHECK(tasks_free(st, in, c).empty());
  }
}

TEST_CASE("help adoption picks the oldest request, then the lowest id") {
  const auto c = constants();
  SupportState free_state;
  free_state.mode = SupportModeKind::Free;

  const std::vector<HelpRequest> reqs{
      {id(5), {1, 1}, 30},
      {id(2), {2, 2}, 10},
      {id(4), {3, 3}, 10},
  };
  const SupportState adopted = accept_help(free_state, reqs, c);
  CHECK(adopted.mode == SupportModeKind::Helping);
  REQUIRE(adopted.help_target.has_value());
  CHECK(*adopted.help_target == Vec2{2, 2});  // tick 10, requester 2 < 4

  SupportState busy;
  busy.mode = SupportModeKind::OnPath;
  CHECK(accept_help(busy, reqs, c).mode == SupportModeKind::OnPath);

  CHECK(accept_help(free_state, {}, c).mode == SupportModeKind::Free);
}

TEST_CASE("support step stamps the cooldown when help goes out") {
  const auto c = constants();
  const std::vector<NodeId> path{id(3), id(2), id(0)};
  const auto s = snap({{0, {0, 0}}, {3, {17, 0}}});
  const auto table = make_table(2, {{0, 0, 1}, {3, 3, 1}});
  SupportInputs in{25, id(2), {0.5, 0}, &table, &s, std::span<const NodeId>(path), {}};

  const SupportDecision d = support_step(SupportState{}, in, c);
  CHECK(d.state.mode == SupportModeKind::OnPath);
  REQUIRE(d.help.has_value());
  CHECK(d.state.help_ever_issued);
  CHECK(d.state.last_help_issued == 25);
  REQUIRE(d.tasks.size() == 1);
  CHECK(d.tasks[0].kind == TaskKind::EqualDistance);
}

TEST_CASE("a free robot with requests in its inbox starts helping") {
  const auto c = constants();
  const auto s = snap({{1, {5, 0}}});
  const auto table = make_table(2, {{0, 1, 2}, {1, 1, 1}});
  const std::vector<HelpRequest> inbox{{id(1), {9, 9}, 12}};
  SupportInputs in{14, id(2), {4, 0}, &table, &s, std::nullopt,
                   std::span<const HelpRequest>(inbox)};
  const SupportDecision d = support_step(SupportState{}, in, c);
  CHECK(d.state.mode == SupportModeKind::Helping);
  REQUIRE(d.tasks.size() == 1);
  CHECK(d.tasks[0].kind == TaskKind::MoveToGoal);
  CHECK(d.tasks[0].p1 == Vec2{9, 9});
}

TEST_CASE("agent waypoint tracking and loss policy") {
  const auto c = constants();
  const std::vector<Vec2> wps{{10, 0}, {20, 0}};

  RoutingTable connected = make_table(3, {{0, 1, 2}});
  RoutingTable lost;
  lost.owner = id(3);

  SECTION("navigating toward the current waypoint") {
    const auto s = snap({{1, {5, 0}}});
    AgentInputs in{0, {2, 0}, &connected, &s};
    const AgentDecision d = agent_step(AgentState{}, in, wps, c);
    CHECK(d.state.mode == AgentModeKind::Navigate);
    CHECK(d.state.waypoint_index == 0);
    REQUIRE(d.tasks.size() == 1);
    CHECK(d.tasks[0].kind == TaskKind::MoveToGoal);
    CHECK(d.tasks[0].p1 == Vec2{10, 0});
    REQUIRE(d.state.last_first_hop_pos.has_value());
    CHECK(d.state.last_first_hop_pos->pos == Vec2{5, 0});
  }

  SECTION("waypoints advance inside the capture radius") {
    const auto s = snap({{1, {5, 0}}});
    AgentInputs in{0, {9.8, 0}, &connected, &s};
    const AgentDecision d = agent_step(AgentState{}, in, wps, c);
    CHECK(d.state.waypoint_index == 1);
    CHECK(d.tasks[0].p1 == Vec2{20, 0});
  }

  SECTION("after the last waypoint the agent rests") {
    AgentState st;
    st.waypoint_index = 1;
    const auto s = snap({{1, {5, 0}}});
    AgentInputs in{0, {19.9, 0}, &connected, &s};
    const AgentDecision d = agent_step(st, in, wps, c);
    CHECK(d.state.waypoint_index == 2);
    CHECK(d.tasks.empty());
  }

  SECTION("halt the tick the base route disappears") {
    const auto s = snap({});
    AgentInputs in{50, {8, 0}, &lost, &s};
    const AgentDecision d = agent_step(AgentState{}, in, wps, c);
    CHECK(d.state.mode == AgentModeKind::Halt);
    CHECK(*d.state.halt_started == 50);
    CHECK(d.tasks.empty());
  }

  SECTION("backtrack exactly after the waiting time") {
    AgentState st;
    st.mode = AgentModeKind::Halt;
    st.halt_started = 50;
    st.last_first_hop_pos = TimedPos{{5, 0}, 49};
    const auto s = snap({});

    AgentInputs before{149, {8, 0}, &lost, &s};  // 9.9 s
    CHECK(agent_step(st, before, wps, c).state.mode == AgentModeKind::Halt);

    AgentInputs at{150, {8, 0}, &lost, &s};  // 10.0 s
    const AgentDecision d = agent_step(st, at, wps, c);
    CHECK(d.state.mode == AgentModeKind::Backtrack);
    REQUIRE(d.tasks.size() == 1);
    CHECK(d.tasks[0].kind == TaskKind::MoveToGoal);
    CHECK(d.tasks[0].p1 == Vec2{5, 0});
  }

  SECTION("reconnection resumes the same waypoint") {
    AgentState st;
    st.mode = AgentModeKind::Backtrack;
    st.waypoint_index = 1;
    st.halt_started = 50;
    const auto s = snap({{1, {5, 0}}});
    AgentInputs in{200, {8, 0}, &connected, &s};
    const AgentDecision d = agent_step(st, in, wps, c);
    CHECK(d.state.mode == AgentModeKind::Navigate);
    CHECK(d.state.waypoint_index == 1);
    CHECK_FALSE(d.state.halt_started.has_value());
    CHECK(d.tasks[0].p1 == Vec2{20, 0});
  }
}
