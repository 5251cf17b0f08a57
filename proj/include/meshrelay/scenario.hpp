#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "meshrelay/behavior.hpp"
#include "meshrelay/geometry.hpp"

namespace meshrelay {

/// Scenario text format: `key: value` lines grouped under `[section]`
/// headers, `#` comments, blank lines ignored. parse_scenario and
/// format_scenario round-trip exactly (shortest float representation).

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

struct ValidationError : std::runtime_error {
  std::string field;
  ValidationError(std::string field_name, const std::string& what)
      : std::runtime_error(field_name + ": " + what), field(std::move(field_name)) {}
};

struct SupportSpawn {
  Vec2 start{};
  double heading = 0.0;
};

struct Scenario {
  int schema_version = 1;
  std::uint64_t seed = 0;
  double duration_s = 60.0;
  double dt_s = 0.1;

  Bounds bounds{-10.0, -10.0, 10.0, 10.0};
  std::vector<Segment> walls;

  double range_m = 20.0;
  double route_convergence_s = 3.0;
  bool los = false;

  double v_max_mps = 0.2;
  double omega_max_radps = 2.0;
  double heading_gain = 2.0;
  double damping = 1e-3;
  double gain_distance = 0.5;
  double gain_goal = 0.5;
  double gain_equal_distance = 0.5;
  double obstacle_trigger_m = 1.0;
  double obstacle_safe_m = 0.5;
  double lrf_range_m = 4.0;
  double capture_radius_m = 0.3;

  double alpha_stretch = 0.8;
  double help_cooldown_s = 5.0;
  double backtrack_after_s = 10.0;
  FreeStrategy free_strategy = FreeStrategy::BaseFirstNode;
  double position_noise_sigma_m = 0.0;

  Vec2 base_position{};
  Vec2 agent_start{};
  double agent_heading = 0.0;
  std::vector<Vec2> waypoints;
  std::vector<SupportSpawn> supports;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_number(std::string_view s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, "expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, int line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, "expected an unsigned integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<double> parse_numbers(std::string_view s, std::size_t count, int line) {
  auto fields = split_fields(s);
  if (fields.size() != count) {
    throw ParseError(line, "expected " + std::to_string(count) + " numbers, got " +
                               std::to_string(fields.size()));
  }
  std::vector<double> out;
  out.reserve(count);
  for (auto f : fields) out.push_back(parse_number(f, line));
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

inline void require_inside(const Bounds& b, Vec2 p, const char* field) {
  require(b.contains(p), field,
          "position (" + format_double(p.x) + ", " + format_double(p.y) + ") lies outside bounds");
}

}  // namespace detail

inline void validate_scenario(const Scenario& s) {
  using detail::require;
  require(s.schema_version == 1, "schema_version", "only version 1 is supported");
  require(s.dt_s > 0.0, "dt_s", "must be positive");
  require(s.duration_s >= 0.0, "duration_s", "must be non-negative");
  require(s.bounds.xmin < s.bounds.xmax && s.bounds.ymin < s.bounds.ymax, "bounds",
          "min corner must be strictly below max corner");
  require(s.range_m > 0.0, "range_m", "must be positive");
  require(s.route_convergence_s >= 0.0, "route_convergence_s", "must be non-negative");
  require(s.v_max_mps > 0.0, "v_max_mps", "must be positive");
  require(s.omega_max_radps > 0.0, "omega_max_radps", "must be positive");
  require(s.heading_gain > 0.0, "heading_gain", "must be positive");
  require(s.damping > 0.0, "damping", "must be positive");
  require(s.gain_distance > 0.0, "gain_distance", "must be positive");
  require(s.gain_goal > 0.0, "gain_goal", "must be positive");
  require(s.gain_equal_distance > 0.0, "gain_equal_distance", "must be positive");
  require(s.obstacle_trigger_m > 0.0, "obstacle_trigger_m", "must be positive");
  require(s.obstacle_safe_m > 0.0, "obstacle_safe_m", "must be positive");
  require(s.obstacle_safe_m < s.obstacle_trigger_m, "obstacle_safe_m",
          "must be below obstacle_trigger_m");
  require(s.lrf_range_m >= s.obstacle_trigger_m, "lrf_range_m",
          "must reach at least obstacle_trigger_m");
  require(s.capture_radius_m > 0.0, "capture_radius_m", "must be positive");
  require(s.alpha_stretch > 0.0 && s.alpha_stretch < 1.0, "alpha_stretch",
          "must lie strictly between 0 and 1");
  require(s.help_cooldown_s >= 0.0, "help_cooldown_s", "must be non-negative");
  require(s.backtrack_after_s >= 0.0, "backtrack_after_s", "must be non-negative");
  require(s.position_noise_sigma_m >= 0.0, "position_noise_sigma_m", "must be non-negative");
  require(!s.waypoints.empty(), "waypoint", "at least one waypoint is required");

  detail::require_inside(s.bounds, s.base_position, "base.position");
  detail::require_inside(s.bounds, s.agent_start, "agent.start");
  for (const Vec2& w : s.waypoints) detail::require_inside(s.bounds, w, "agent.waypoint");
  for (const SupportSpawn& sp : s.supports) detail::require_inside(s.bounds, sp.start, "support.start");
  for (const Segment& w : s.walls) {
    require(s.bounds.contains(w.a) && s.bounds.contains(w.b), "world.wall",
            "wall endpoints must lie inside bounds");
  }
}

inline Scenario parse_scenario(std::string_view text) {
  Scenario s;
  s.waypoints.clear();
  std::string section;
  bool base_seen = false;
  bool agent_seen = false;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "world" && section != "radio" && section != "control" &&
          section != "behavior" && section != "base" && section != "agent" &&
          section != "support") {
        throw ParseError(line_no, "unknown section [" + section + "]");
      }
      continue;
    }

    auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected 'key: value'");
    std::string key(detail::trim(line.substr(0, colon)));
    std::string_view value = detail::trim(line.substr(colon + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");

    auto num = [&](double& dst) { dst = detail::parse_number(value, line_no); };
    auto vec = [&](Vec2& dst) {
      auto v = detail::parse_numbers(value, 2, line_no);
      dst = {v[0], v[1]};
    };

    if (section.empty()) {
      if (key == "schema_version") {
        s.schema_version = static_cast<int>(detail::parse_number(value, line_no));
      } else if (key == "seed") {
        s.seed = detail::parse_u64(value, line_no);
      } else if (key == "duration_s") {
        num(s.duration_s);
      } else if (key == "dt_s") {
        num(s.dt_s);
      } else {
        throw ParseError(line_no, "unknown key '" + key + "'");
      }
    } else if (section == "world") {
      if (key == "bounds") {
        auto v = detail::parse_numbers(value, 4, line_no);
        s.bounds = {v[0], v[1], v[2], v[3]};
      } else if (key == "wall") {
        auto v = detail::parse_numbers(value, 4, line_no);
        s.walls.push_back({{v[0], v[1]}, {v[2], v[3]}});
      } else {
        throw ParseError(line_no, "unknown key '" + key + "' in [world]");
      }
    } else if (section == "radio") {
      if (key == "range_m") {
        num(s.range_m);
      } else if (key == "route_convergence_s") {
        num(s.route_convergence_s);
      } else if (key == "los") {
        if (value == "on") {
          s.los = true;
        } else if (value == "off") {
          s.los = false;
        } else {
          throw ParseError(line_no, "los must be 'on' or 'off'");
        }
      } else {
        throw ParseError(line_no, "unknown key '" + key + "' in [radio]");
      }
    } else if (section == "control") {
      if (key == "v_max_mps") num(s.v_max_mps);
      else if (key == "omega_max_radps") num(s.omega_max_radps);
      else if (key == "heading_gain") num(s.heading_gain);
      else if (key == "damping") num(s.damping);
      else if (key == "gain_distance") num(s.gain_distance);
      else if (key == "gain_goal") num(s.gain_goal);
      else if (key == "gain_equal_distance") num(s.gain_equal_distance);
      else if (key == "obstacle_trigger_m") num(s.obstacle_trigger_m);
      else if (key == "obstacle_safe_m") num(s.obstacle_safe_m);
      else if (key == "lrf_range_m") num(s.lrf_range_m);
      else if (key == "capture_radius_m") num(s.capture_radius_m);
      else throw ParseError(line_no, "unknown key '" + key + "' in [control]");
    } else if (section == "behavior") {
      if (key == "alpha_stretch") {
        num(s.alpha_stretch);
      } else if (key == "help_cooldown_s") {
        num(s.help_cooldown_s);
      } else if (key == "backtrack_after_s") {
        num(s.backtrack_after_s);
      } else if (key == "free_strategy") {
        if (value == "base_first_node") {
          s.free_strategy = FreeStrategy::BaseFirstNode;
        } else if (value == "first_hops") {
          s.free_strategy = FreeStrategy::FirstHops;
        } else {
          throw ParseError(line_no, "free_strategy must be 'base_first_node' or 'first_hops'");
        }
      } else if (key == "position_noise_sigma_m") {
        num(s.position_noise_sigma_m);
      } else {
        throw ParseError(line_no, "unknown key '" + key + "' in [behavior]");
      }
    } else if (section == "base") {
      if (key == "position") {
        vec(s.base_position);
        base_seen = true;
      } else {
        throw ParseError(line_no, "unknown key '" + key + "' in [base]");
      }
    } else if (section == "agent") {
      if (key == "start") {
        vec(s.agent_start);
        agent_seen = true;
      } else if (key == "heading") {
        num(s.agent_heading);
      } else if (key == "waypoint") {
        Vec2 w;
        vec(w);
        s.waypoints.push_back(w);
      } else {
        throw ParseError(line_no, "unknown key '" + key + "' in [agent]");
      }
    } else if (section == "support") {
      if (key == "start") {
        auto fields = detail::split_fields(value);
        if (fields.size() != 2 && fields.size() != 3) {
          throw ParseError(line_no, "support start takes 'x y' or 'x y heading'");
        }
        SupportSpawn sp;
        sp.start = {detail::parse_number(fields[0], line_no),
                    detail::parse_number(fields[1], line_no)};
        if (fields.size() == 3) sp.heading = detail::parse_number(fields[2], line_no);
        s.supports.push_back(sp);
      } else {
        throw ParseError(line_no, "unknown key '" + key + "' in [support]");
      }
    }
  }

  if (!base_seen) throw ValidationError("base.position", "missing [base] position");
  if (!agent_seen) throw ValidationError("agent.start", "missing [agent] start");
  validate_scenario(s);
  return s;
}

/// Canonical serialization: parse(format_scenario(s)) reproduces s exactly.
inline std::string format_scenario(const Scenario& s) {
  using detail::format_double;
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& value) { out << key << ": " << value << "\n"; };
  auto kd = [&](const char* key, double v) { kv(key, format_double(v)); };
  auto kvec = [&](const char* key, Vec2 v) {
    kv(key, format_double(v.x) + " " + format_double(v.y));
  };

  kv("schema_version", std::to_string(s.schema_version));
  kv("seed", std::to_string(s.seed));
  kd("duration_s", s.duration_s);
  kd("dt_s", s.dt_s);

  out << "\n[world]\n";
  kv("bounds", format_double(s.bounds.xmin) + " " + format_double(s.bounds.ymin) + " " +
                   format_double(s.bounds.xmax) + " " + format_double(s.bounds.ymax));
  for (const Segment& w : s.walls) {
    kv("wall", format_double(w.a.x) + " " + format_double(w.a.y) + " " + format_double(w.b.x) +
                   " " + format_double(w.b.y));
  }

  out << "\n[radio]\n";
  kd("range_m", s.range_m);
  kd("route_convergence_s", s.route_convergence_s);
  kv("los", s.los ? "on" : "off");

  out << "\n[control]\n";
  kd("v_max_mps", s.v_max_mps);
  kd("omega_max_radps", s.omega_max_radps);
  kd("heading_gain", s.heading_gain);
  kd("damping", s.damping);
  kd("gain_distance", s.gain_distance);
  kd("gain_goal", s.gain_goal);
  kd("gain_equal_distance", s.gain_equal_distance);
  kd("obstacle_trigger_m", s.obstacle_trigger_m);
  kd("obstacle_safe_m", s.obstacle_safe_m);
  kd("lrf_range_m", s.lrf_range_m);
  kd("capture_radius_m", s.capture_radius_m);

  out << "\n[behavior]\n";
  kd("alpha_stretch", s.alpha_stretch);
  kd("help_cooldown_s", s.help_cooldown_s);
  kd("backtrack_after_s", s.backtrack_after_s);
  kv("free_strategy",
     s.free_strategy == FreeStrategy::BaseFirstNode ? "base_first_node" : "first_hops");
  kd("position_noise_sigma_m", s.position_noise_sigma_m);

  out << "\n[base]\n";
  kvec("position", s.base_position);

  out << "\n[agent]\n";
  kvec("start", s.agent_start);
  kd("heading", s.agent_heading);
  for (const Vec2& w : s.waypoints) kvec("waypoint", w);

  out << "\n[support]\n";
  for (const SupportSpawn& sp : s.supports) {
    kv("start", format_double(sp.start.x) + " " + format_double(sp.start.y) + " " +
                    format_double(sp.heading));
  }
  return out.str();
}

}  // namespace meshrelay
