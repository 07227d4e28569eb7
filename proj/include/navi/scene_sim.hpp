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

#pragma once

// Hardware-free stand-in for the headset: synthetic scenes, analytic depth
// rendering and closed-loop walks through the full pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "navi/frame_ingest.hpp"
#include "navi/geometry.hpp"
#include "navi/heading_planner.hpp"
#include "navi/pipeline.hpp"

namespace navi {

struct SceneSpec {
  std::optional<double> floor_z = 0.0;  // infinite horizontal floor, if any
  std::vector<Aabb> boxes;
  std::vector<Aabb> walls;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("SceneSpec: noise_sigma must be >= 0");
    for (const Aabb& b : boxes) {
      if (!b.is_valid()) throw std::invalid_argument("SceneSpec: invalid box");
    }
    for (const Aabb& w : walls) {
      if (!w.is_valid()) throw std::invalid_argument("SceneSpec: invalid wall");
    }
  }
};

/// 320x288 long-throw-class stream, ~77 degree horizontal field of view.
inline CameraIntrinsics default_intrinsics() { return {320, 288, 200.0, 200.0, 160.0, 144.0}; }

/// Camera at `eye` looking along GRF yaw `yaw_deg`, pitched down by
/// `pitch_down_deg`, with no roll.
inline HeadPose look_pose(const Vec3& eye, double yaw_deg, double pitch_down_deg,
                          double timestamp = 0.0) {
  const SinCos yaw = sincos_deg(yaw_deg);
  const SinCos pitch = sincos_deg(pitch_down_deg);
  const Vec3 forward(pitch.cos * yaw.cos, pitch.cos * yaw.sin, -pitch.sin);
  const Vec3 right(yaw.sin, -yaw.cos, 0.0);
  const Vec3 down = forward.cross(right);
  HeadPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = eye;
  pose.timestamp = timestamp;
  return pose;
}

/// Slab-method entry distance of the ray origin + t * dir into `box`, for
/// t > 0. A ray starting inside the box reports nothing.
inline std::optional<double> ray_aabb(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / dir[a];
    double t0 = (box.min[a] - origin[a]) * inv;
    double t1 = (box.max[a] - origin[a]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (!(t_near > 0.0)) return std::nullopt;
  return t_near;
}

struct RenderOptions {
  double max_range = 7.5;
  std::uint64_t noise_stream = 0;  // selects the noise sequence for this frame
};

/// Per-pixel nearest hit along the pinhole ray, reported as camera z-depth.
/// Pixels with no hit within `max_range` are 0.0.
inline DepthFrame render_depth(const SceneSpec& scene, const HeadPose& pose,
                               const CameraIntrinsics& intrinsics, const RenderOptions& options = {}) {
  scene.validate();
  pose.validate();
  intrinsics.validate();

  DepthFrame frame;
  frame.timestamp = pose.timestamp;
  frame.intrinsics = intrinsics;
  frame.depth.assign(intrinsics.pixel_count(), 0.0F);

  std::seed_seq seq{static_cast<std::uint32_t>(scene.seed), static_cast<std::uint32_t>(scene.seed >> 32),
                    static_cast<std::uint32_t>(options.noise_stream),
                    static_cast<std::uint32_t>(options.noise_stream >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, scene.noise_sigma > 0.0 ? scene.noise_sigma : 1.0);

  const Vec3& origin = pose.translation;
  std::size_t i = 0;
  for (int v = 0; v < intrinsics.height; ++v) {
    for (int u = 0; u < intrinsics.width; ++u, ++i) {
      // Unnormalized so that the ray parameter equals the camera z-depth.
      const Vec3 dir_cam((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy, 1.0);
      const Vec3 dir = pose.rotation * dir_cam;

      double best = std::numeric_limits<double>::infinity();
      if (scene.floor_z && dir.z() != 0.0) {
        const double t = (*scene.floor_z - origin.z()) / dir.z();
        if (t > 0.0) best = t;
      }
      for (const auto* list : {&scene.boxes, &scene.walls}) {
        for (const Aabb& box : *list) {
          if (auto t = ray_aabb(origin, dir, box); t && *t < best) best = *t;
        }
      }
      if (!(best <= options.max_range)) continue;
      double d = best;
      if (scene.noise_sigma > 0.0) d += noise(rng);
      if (d > 0.0) frame.depth[i] = static_cast<float>(d);
    }
  }
  return frame;
}

// Agent ---------------------------------------------------------------------

struct AgentState {
  Vec2 position = Vec2::Zero();
  double yaw = 0.0;    // degrees
  double speed = 0.8;  // m/s
  Vec2 goal = Vec2::Zero();

  bool operator==(const AgentState&) const = default;
};

inline constexpr double kDefaultTurnRate = 120.0;  // deg/s

/// Slews yaw toward the planner heading at no more than `turn_rate` deg/s,
/// then advances speed * dt along the new yaw. A blocked result stops the
/// agent in place.
inline AgentState step_agent(AgentState state, const HeadingResult& result, double dt,
                             double turn_rate = kDefaultTurnRate) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_agent: dt must be positive");
  const double max_turn = turn_rate * dt;
  const double error = wrap_deg_signed(result.heading - state.yaw);
  state.yaw = normalize_deg(state.yaw + std::clamp(error, -max_turn, max_turn));
  if (result.status == HeadingStatus::blocked) {
    state.speed = 0.0;
    return state;
  }
  const SinCos dir = sincos_deg(state.yaw);
  state.position += state.speed * dt * Vec2(dir.cos, dir.sin);
  return state;
}

/// 2D distance from `p` to the nearest box or wall footprint whose height
/// range meets the slab.
inline double scene_clearance(const SceneSpec& scene, const Vec2& p, const HeightSlab& slab = {}) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto* list : {&scene.boxes, &scene.walls}) {
    for (const Aabb& b : *list) {
      if (b.max.z() < slab.min_z || b.min.z() > slab.max_z) continue;
      best = std::min(best, distance_to_rect(p, Rect2{b.min.head<2>(), b.max.head<2>()}));
    }
  }
  return best;
}

/// Replaces scene.boxes[box] before rendering step `step`.
struct SceneEvent {
  int step = 0;
  std::size_t box = 0;
  Aabb new_box;
};

struct WalkOptions {
  PipelineConfig pipeline;
  CameraIntrinsics intrinsics = default_intrinsics();
  RenderOptions render;
  double eye_height = 1.6;
  double pitch_down = 20.0;
  double fps = 5.0;
  double turn_rate = kDefaultTurnRate;
  double goal_tolerance = 0.3;
  std::vector<SceneEvent> events;
  ScanExecution scan = ScanExecution::sequential;
};

struct WalkStep {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
  double yaw = 0.0;
  double heading = 0.0;
  double deviation = 0.0;
  HeadingStatus status = HeadingStatus::clear_ahead;
  double speed = 0.0;
  double min_clearance = 0.0;
  bool floor_found = false;
  std::vector<Obstacle> obstacles;

  bool operator==(const WalkStep&) const = default;
};

struct WalkTrace {
  std::vector<WalkStep> steps;
  bool reached_goal = false;

  bool operator==(const WalkTrace&) const = default;

  double min_clearance() const {
    double m = std::numeric_limits<double>::infinity();
    for (const WalkStep& s : steps) m = std::min(m, s.min_clearance);
    return m;
  }
};

inline double bearing_deg(const Vec2& from, const Vec2& to) {
  return normalize_deg(std::atan2(to.y() - from.y(), to.x() - from.x()) * kRadToDeg);
}

/// Closed loop at `options.fps`: render the current view, run the pipeline,
/// plan toward the goal and move the agent. Stops early once the agent is
/// within `goal_tolerance` of the goal. Each step records the post-move
/// state.
inline WalkTrace run_walk(SceneSpec scene, const AgentState& start, const PlannerParams& params,
                          int frames, const WalkOptions& options = {}) {
  if (frames < 1) throw std::invalid_argument("run_walk: frames must be >= 1");
  if (!(options.fps > 0.0)) throw std::invalid_argument("run_walk: fps must be positive");
  PipelineConfig config = options.pipeline;
  config.planner = params;
  Pipeline pipeline(options.intrinsics, config);

  const double dt = 1.0 / options.fps;
  WalkTrace trace;
  AgentState state = start;
  for (int step = 0; step < frames; ++step) {
    for (const SceneEvent& e : options.events) {
      if (e.step == step && e.box < scene.boxes.size()) scene.boxes[e.box] = e.new_box;
    }
    const double t = step * dt;
    const HeadPose pose = look_pose(Vec3(state.position.x(), state.position.y(), options.eye_height),
                                    state.yaw, options.pitch_down, t);
    RenderOptions render = options.render;
    render.noise_stream = static_cast<std::uint64_t>(step);
    const FrameReport report = pipeline.process(render_depth(scene, pose, options.intrinsics, render), pose);

    HeadingQuery query{state.position, bearing_deg(state.position, state.goal), pipeline.flat_obstacles()};
    const HeadingResult result = find_safe_heading(query, params, options.scan);

    state.speed = start.speed;
    state = step_agent(state, result, dt, options.turn_rate);

    WalkStep rec;
    rec.t = t;
    rec.position = state.position;
    rec.yaw = state.yaw;
    rec.heading = result.heading;
    rec.deviation = result.deviation;
    rec.status = result.status;
    rec.speed = state.speed;
    rec.min_clearance = scene_clearance(scene, state.position, config.slab);
    rec.floor_found = report.floor_found;
    rec.obstacles = pipeline.map().obstacles();
    trace.steps.push_back(std::move(rec));

    if ((state.goal - state.position).norm() <= options.goal_tolerance) {
      trace.reached_goal = true;
      break;
    }
  }
  return trace;
}

/// One JSON object per step: {t, position, yaw, heading, status, min_clearance}.
inline std::string trace_to_jsonl(const WalkTrace& trace) {
  std::ostringstream out;
  for (const WalkStep& s : trace.steps) {
    nlohmann::json rec = {{"t", s.t},
                          {"position", {s.position.x(), s.position.y()}},
                          {"yaw", s.yaw},
                          {"heading", s.heading},
                          {"status", to_string(s.status)},
                          {"min_clearance", s.min_clearance}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

// Corridor fixtures -----------------------------------------------------------

struct CorridorScenario {
  SceneSpec scene;
  AgentState start;
  std::vector<SceneEvent> events;
};

inline constexpr double kCorridorHalfWidth = 1.5;
inline constexpr double kCorridorLength = 10.0;

inline Aabb person_box(double x, double y) {
  return Aabb::centered(Vec3(x, y, 0.9), Vec3(0.5, 0.5, 1.8));
}

/// A 3 m wide, 10 m long corridor walked from x = 0 to x = 10 along y = 0,
/// with one or two person-sized boxes that leave a passable gap on one side.
/// When `moving` is set, the farther box is shifted along the corridor
/// partway through the walk.
inline CorridorScenario corridor_scenario(std::uint64_t seed, bool moving = true,
                                          double noise_sigma = 0.01) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto lateral = [&] { return (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(0.35, 0.7); };

  CorridorScenario s;
  s.scene.floor_z = 0.0;
  s.scene.noise_sigma = noise_sigma;
  s.scene.seed = seed;
  const double w = kCorridorHalfWidth;
  s.scene.walls.push_back(Aabb::from_corners(Vec3(-1.0, w, 0.0), Vec3(kCorridorLength + 2.0, w + 0.1, 2.5)));
  s.scene.walls.push_back(Aabb::from_corners(Vec3(-1.0, -w - 0.1, 0.0), Vec3(kCorridorLength + 2.0, -w, 2.5)));

  s.scene.boxes.push_back(person_box(uniform(2.5, 4.0), lateral()));
  if (unit(rng) < 0.5 || moving) {
    const double x = uniform(6.5, 8.0);
    const double y = lateral();
    s.scene.boxes.push_back(person_box(x, y));
    if (moving) {
      // Keeps at least 2 m between the two boxes along the corridor.
      const double shift = (x < 7.25 ? 1.0 : -1.0) * uniform(0.8, 1.2);
      s.events.push_back({static_cast<int>(uniform(10.0, 25.0)), 1, person_box(x + shift, y)});
    }
  }
  s.start = AgentState{Vec2(0.0, 0.0), 0.0, 0.8, Vec2(kCorridorLength, 0.0)};
  return s;
}

}  // namespace navi
