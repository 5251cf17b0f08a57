#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "meshrelay/logging.hpp"
#include "meshrelay/scenario.hpp"
#include "meshrelay/sim.hpp"

namespace meshrelay {

/// Reads and parses a scenario file.
inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str());
}

struct RunReport {
  Metrics metrics;
  Tick ticks = 0;
  std::filesystem::path out_dir;
  double wall_seconds = 0.0;  // not written to any file
};

/// Runs a scenario for round(duration / dt) ticks and writes the run
/// artifacts into out_dir: scenario_resolved.scn, trajectory.csv,
/// packets.csv, modes.csv, metrics.txt. File contents depend only on the
/// scenario, so repeated runs produce byte-identical trees.
inline RunReport run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  auto open = [&](const char* name) {
    std::ofstream os(out_dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return os;
  };

  {
    std::ofstream os = open("scenario_resolved.scn");
    os << format_scenario(sc);
  }

  std::ofstream traj = open("trajectory.csv");
  std::ofstream pkts = open("packets.csv");
  std::ofstream modes = open("modes.csv");
  write_trajectory_header(traj);
  write_packets_header(pkts);
  write_modes_header(modes);

  const Tick ticks = static_cast<Tick>(std::llround(sc.duration_s / sc.dt_s));
  const auto t0 = std::chrono::steady_clock::now();
  Sim sim(sc);
  for (Tick t = 0; t < ticks; ++t) {
    const StepLog log = sim.step();
    append_trajectory(traj, log, sc.dt_s);
    append_packets(pkts, log);
    append_modes(modes, log);
  }
  const auto t1 = std::chrono::steady_clock::now();

  {
    std::ofstream os = open("metrics.txt");
    os << format_metrics(sim.metrics());
  }

  RunReport report;
  report.metrics = sim.metrics();
  report.ticks = ticks;
  report.out_dir = out_dir;
  report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  return report;
}

}  // namespace meshrelay
