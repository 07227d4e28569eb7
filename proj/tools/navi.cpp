// Copyright 2026 The Navi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// navi: replay, benchmark, serve and simulate from the command line.
//
// Exit codes: 0 ok, 1 usage, 2 malformed input.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "navi/gateway.hpp"
#include "navi/replay.hpp"
#include "navi/scene_sim.hpp"
#include "navi/transit_nav.hpp"
#include "navi/wire.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMalformed = 2;

navi::SessionConfig load_config(const std::string& path) {
  if (path.empty()) {
    navi::SessionConfig cfg;
    navi::apply_env_overrides(cfg);
    return cfg;
  }
  return navi::load_session_config(path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw navi::FormatError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_replay(const std::string& dir, const std::string& config_path, bool bench,
               const std::string& dump_scene, const std::string& obstacles_out) {
  const navi::SessionConfig cfg = load_config(config_path);
  const auto container = navi::ReplayContainer::open(dir);
  const navi::ReplayReport report = navi::run_replay(container, cfg.pipeline);

  std::cout << "replayed " << report.frames << " frames, obstacles: "
            << (report.reports.empty() ? 0 : report.reports.back().obstacles_total) << "\n";
  if (bench) navi::write_bench(std::cout, report);
  if (!dump_scene.empty()) {
    std::ofstream out(dump_scene);
    if (!out) throw std::runtime_error("cannot write " + dump_scene);
    navi::write_scene_csv(out, report.last_scene);
  }
  if (!obstacles_out.empty()) {
    std::ofstream out(obstacles_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + obstacles_out);
    out << report.obstacles_body;
  }
  return kExitOk;
}

int run_serve(const std::string& config_path, const std::string& listen) {
  navi::SessionConfig cfg = load_config(config_path);
  if (!listen.empty()) {
    cfg.listen_address = listen;
    cfg.validate();
  }
  navi::Gateway gateway(cfg);
  httplib::Server server;
  gateway.mount(server);
  std::cerr << "listening on " << cfg.listen_address << "\n";
  if (!server.listen(cfg.host(), cfg.port())) {
    std::cerr << "cannot listen on " << cfg.listen_address << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int run_walk(std::uint64_t seed, int frames, bool moving, const std::string& trace_path) {
  const navi::CorridorScenario scenario = navi::corridor_scenario(seed, moving);
  navi::WalkOptions options;
  options.events = scenario.events;
  const navi::WalkTrace trace =
      navi::run_walk(scenario.scene, scenario.start, options.pipeline.planner, frames, options);
  const std::string jsonl = navi::trace_to_jsonl(trace);
  if (trace_path.empty()) {
    std::cout << jsonl;
  } else {
    std::ofstream(trace_path) << jsonl;
  }
  std::cerr << "steps: " << trace.steps.size() << ", reached goal: " << (trace.reached_goal ? "yes" : "no")
            << ", min clearance: " << trace.min_clearance() << " m\n";
  return kExitOk;
}

int run_nav(const std::string& fixture, const std::string& feed, double radius) {
  navi::TriggerState state = navi::TriggerState::start(navi::parse_plan(slurp(fixture)), radius);
  for (const navi::GpsFix& fix : navi::parse_gps_feed(slurp(feed))) {
    if (auto hit = navi::next_instruction(state, fix.coord)) {
      std::cout << fix.timestamp << "\t" << hit->first << "\n";
      state = std::move(hit->second);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"navi: depth-stream obstacle avoidance engine"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Session config file (JSON)");

  auto* replay = app.add_subcommand("replay", "Stream a replay container through the pipeline");
  std::string replay_dir;
  bool bench = false;
  std::string dump_scene;
  std::string obstacles_out;
  replay->add_option("dir", replay_dir, "Replay container directory")->required();
  replay->add_flag("--bench", bench, "Print per-stage latency percentiles and fps");
  replay->add_option("--dump-scene", dump_scene, "Write the final frame's labeled cloud as CSV");
  replay->add_option("--obstacles-out", obstacles_out, "Write the final obstacle list (JSON)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  std::string listen;
  serve->add_option("--listen", listen, "host:port (overrides config and environment)");

  auto* simulate = app.add_subcommand("simulate", "Render a synthetic corridor replay container");
  std::string sim_dir;
  std::size_t sim_frames = 100;
  std::uint64_t sim_seed = 1;
  simulate->add_option("dir", sim_dir, "Output directory")->required();
  simulate->add_option("--frames", sim_frames, "Frame count")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "Scenario seed");

  auto* walk = app.add_subcommand("walk", "Closed-loop corridor walk; prints the JSON-lines trace");
  std::uint64_t walk_seed = 1;
  int walk_frames = 150;
  bool walk_static = false;
  std::string trace_path;
  walk->add_option("--seed", walk_seed, "Scenario seed");
  walk->add_option("--frames", walk_frames, "Frame budget")->check(CLI::PositiveNumber);
  walk->add_flag("--static", walk_static, "Do not move boxes during the walk");
  walk->add_option("--trace", trace_path, "Write the trace here instead of stdout");

  auto* nav = app.add_subcommand("nav", "Replay a GPS feed against a directions fixture");
  std::string fixture;
  std::string feed;
  double radius = 15.0;
  nav->add_option("fixture", fixture, "Directions-response JSON")->required();
  nav->add_option("feed", feed, "GPS feed, lines of lat,lon,timestamp")->required();
  nav->add_option("--radius", radius, "Trigger radius in meters")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*replay) return run_replay(replay_dir, config_path, bench, dump_scene, obstacles_out);
    if (*serve) return run_serve(config_path, listen);
    if (*simulate) {
      navi::write_corridor_replay(sim_dir, sim_frames, sim_seed);
      std::cout << "wrote " << sim_frames << " frames to " << sim_dir << "\n";
      return kExitOk;
    }
    if (*walk) return run_walk(walk_seed, walk_frames, !walk_static, trace_path);
    if (*nav) return run_nav(fixture, feed, radius);
  } catch (const navi::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const navi::PlanParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
