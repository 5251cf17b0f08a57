#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "meshrelay/scenario.hpp"
#include "meshrelay/sim.hpp"

namespace meshrelay {

/// Log writers. Every file starts with a `# meshrelay <name> log
/// schema_version=1` banner and a CSV header; rows are appended per tick.
/// All numbers are formatted with fixed precision so identical runs produce
/// byte-identical files.

namespace detail {

inline std::string fixed(double v, int precision) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, p);
}

inline std::string opt_id(const std::optional<NodeId>& id) {
  return id ? std::to_string(id->v) : "-";
}

}  // namespace detail

inline void write_trajectory_header(std::ostream& os) {
  os << "# meshrelay trajectory log schema_version=1\n";
  os << "tick,time_s,node,role,x_m,y_m,heading_rad,mode,on_path\n";
}

inline void append_trajectory(std::ostream& os, const StepLog& log, double dt) {
  const std::string t = std::to_string(log.tick);
  const std::string time = detail::fixed(static_cast<double>(log.tick) * dt, 3);
  for (const NodeStep& n : log.nodes) {
    os << t << ',' << time << ',' << n.id.v << ',' << to_string(n.role) << ','
       << detail::fixed(n.pose.position.x, 6) << ',' << detail::fixed(n.pose.position.y, 6) << ','
       << detail::fixed(n.pose.heading, 6) << ',' << n.mode << ',' << (n.on_path ? 1 : 0) << '\n';
  }
}

inline void write_packets_header(std::ostream& os) {
  os << "# meshrelay packets log schema_version=1\n";
  os << "seq,created_tick,outcome,drop_reason,drop_node,hop_count,hop_trace\n";
}

inline void append_packets(std::ostream& os, const StepLog& log) {
  if (!log.packet) return;
  const PacketOutcome& p = *log.packet;
  os << p.seq << ',' << p.created_tick << ',' << (p.delivered ? "delivered" : "dropped") << ','
     << (p.drop_reason ? to_string(*p.drop_reason) : "-") << ',' << detail::opt_id(p.dropped_at)
     << ',' << (p.hop_trace.size() - 1) << ',';
  for (std::size_t i = 0; i < p.hop_trace.size(); ++i) {
    if (i > 0) os << '|';
    os << p.hop_trace[i].v;
  }
  os << '\n';
}

inline void write_modes_header(std::ostream& os) {
  os << "# meshrelay modes log schema_version=1\n";
  os << "tick,node,state,predecessor,successor,active_tasks\n";
}

inline void append_modes(std::ostream& os, const StepLog& log) {
  for (const NodeStep& n : log.nodes) {
    if (n.role == NodeRole::Base) continue;
    os << log.tick << ',' << n.id.v << ',' << n.mode << ',' << detail::opt_id(n.predecessor)
       << ',' << detail::opt_id(n.successor) << ',';
    if (n.tasks.empty()) {
      os << '-';
    } else {
      for (std::size_t i = 0; i < n.tasks.size(); ++i) {
        if (i > 0) os << '+';
        os << to_string(n.tasks[i]);
      }
    }
    os << '\n';
  }
}

inline std::string format_metrics(const Metrics& m) {
  std::string out;
  out += "# meshrelay metrics schema_version=1\n";
  auto kv = [&](const char* k, const std::string& v) {
    out += k;
    out += ": ";
    out += v;
    out += '\n';
  };
  auto count_of = [&](DropReason r) {
    auto it = m.drops_by_reason.find(r);
    return it == m.drops_by_reason.end() ? std::int64_t{0} : it->second;
  };
  kv("ticks", std::to_string(m.ticks));
  kv("packets_sent", std::to_string(m.packets_sent));
  kv("packets_delivered", std::to_string(m.packets_delivered));
  kv("packets_dropped", std::to_string(m.packets_dropped));
  kv("drops_no_route", std::to_string(count_of(DropReason::NoRoute)));
  kv("drops_link_down", std::to_string(count_of(DropReason::LinkDown)));
  kv("drops_ttl_exceeded", std::to_string(count_of(DropReason::TtlExceeded)));
  kv("delivery_ratio", detail::fixed(m.delivery_ratio(), 6));
  kv("topology_changes", std::to_string(m.topology_change_ticks.size()));
  kv("help_requests", std::to_string(m.help_requests));
  kv("free_to_onpath", std::to_string(m.free_to_onpath));
  kv("disconnected_ticks", std::to_string(m.disconnected_ticks));
  kv("navigate_ticks", std::to_string(m.navigate_ticks));
  kv("halt_ticks", std::to_string(m.halt_ticks));
  kv("backtrack_ticks", std::to_string(m.backtrack_ticks));
  kv("max_step_displacement_m", detail::fixed(m.max_step_displacement_m, 6));
  kv("min_wall_clearance_m", detail::fixed(m.min_wall_clearance_m, 6));
  kv("max_route_distance_m", detail::fixed(m.max_route_distance_m, 6));
  return out;
}

/// Aggregate view of a packets log, overall and per fixed-width tick window.
struct PacketSummary {
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::map<std::string, std::int64_t> drops_by_reason;
  Tick window_ticks = 0;

  struct Window {
    Tick start_tick = 0;
    std::int64_t sent = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped = 0;
  };
  std::vector<Window> windows;

  double delivery_ratio() const {
    return sent == 0 ? 1.0 : static_cast<double>(delivered) / static_cast<double>(sent);
  }
};

/// Parses packets.csv text back into a summary. Rows are grouped by
/// created_tick into contiguous windows of window_ticks, starting at 0.
inline PacketSummary summarize_packets(std::string_view text, Tick window_ticks) {
  if (window_ticks <= 0) throw std::invalid_argument("window_ticks must be positive");
  PacketSummary sum;
  sum.window_ticks = window_ticks;

  int line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }

    std::vector<std::string_view> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cols.size() != 7) {
      throw ParseError(line_no, "expected 7 columns, got " + std::to_string(cols.size()));
    }

    Tick created = 0;
    auto [p, ec] = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), created);
    if (ec != std::errc{}) throw ParseError(line_no, "bad created_tick");
    const bool delivered = cols[2] == "delivered";
    if (!delivered && cols[2] != "dropped") throw ParseError(line_no, "bad outcome");

    ++sum.sent;
    if (delivered) {
      ++sum.delivered;
    } else {
      ++sum.dropped;
      ++sum.drops_by_reason[std::string(cols[3])];
    }

    const std::size_t w = static_cast<std::size_t>(created / window_ticks);
    if (sum.windows.size() <= w) {
      std::size_t old = sum.windows.size();
      sum.windows.resize(w + 1);
      for (std::size_t i = old; i < sum.windows.size(); ++i) {
        sum.windows[i].start_tick = static_cast<Tick>(i) * window_ticks;
      }
    }
    PacketSummary::Window& win = sum.windows[w];
    ++win.sent;
    if (delivered) {
      ++win.delivered;
    } else {
      ++win.dropped;
    }
  }
  return sum;
}

inline std::string format_packet_summary(const PacketSummary& s) {
  std::string out;
  out += "# meshrelay packet summary schema_version=1\n";
  out += "sent: " + std::to_string(s.sent) + '\n';
  out += "delivered: " + std::to_string(s.delivered) + '\n';
  out += "dropped: " + std::to_string(s.dropped) + '\n';
  out += "delivery_ratio: " + detail::fixed(s.delivery_ratio(), 6) + '\n';
  for (const auto& [reason, count] : s.drops_by_reason) {
    out += "drops_" + reason + ": " + std::to_string(count) + '\n';
  }
  out += "window_ticks: " + std::to_string(s.window_ticks) + '\n';
  out += "window_start_tick,sent,delivered,dropped,loss_ratio\n";
  for (const auto& w : s.windows) {
    const double loss =
        w.sent == 0 ? 0.0 : static_cast<double>(w.dropped) / static_cast<double>(w.sent);
    out += std::to_string(w.start_tick) + ',' + std::to_string(w.sent) + ',' +
           std::to_string(w.delivered) + ',' + std::to_string(w.dropped) + ',' +
           detail::fixed(loss, 6) + '\n';
  }
  return out;
}

}  // namespace meshrelay
