// Command-line front end: runs scenarios and summarizes packet logs.
//
//   meshrelay run --scenario corridor.scn --out out/corridor
//   meshrelay summarize --packets out/corridor/packets.csv --window 100

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "meshrelay/meshrelay.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed, const std::optional<double>& duration) {
  meshrelay::Scenario sc = meshrelay::load_scenario(scenario_path);
  if (seed) sc.seed = *seed;
  if (duration) sc.duration_s = *duration;
  meshrelay::validate_scenario(sc);

  const meshrelay::RunReport report = meshrelay::run_scenario(sc, out_dir);
  std::cout << meshrelay::format_metrics(report.metrics);
  std::cout << "wall_seconds: " << report.wall_seconds << "\n";
  std::cout << "out_dir: " << report.out_dir.string() << "\n";
  return 0;
}

int cmd_summarize(const std::string& packets_path, std::int64_t window,
                  const std::string& out_path) {
  const meshrelay::PacketSummary sum =
      meshrelay::summarize_packets(slurp(packets_path), window);
  const std::string text = meshrelay::format_packet_summary(sum);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic multi-hop relay chain simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string run_out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  CLI::App* run = app.add_subcommand("run", "run a scenario and write its logs");
  run->add_option("--scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", run_out, "output directory (default: out)");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--duration", duration, "override the duration in seconds");

  std::string packets_path;
  std::int64_t window = 100;
  std::string summary_out;
  CLI::App* summarize = app.add_subcommand("summarize", "aggregate a packets.csv log");
  summarize->add_option("--packets", packets_path, "packets.csv file")->required();
  summarize->add_option("--window", window, "window width in ticks (default: 100)");
  summarize->add_option("--out", summary_out, "write the summary here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, run_out, seed, duration);
    if (summarize->parsed()) return cmd_summarize(packets_path, window, summary_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
