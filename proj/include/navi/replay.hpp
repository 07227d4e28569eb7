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

// On-disk recording of a depth stream:
//
//   <dir>/intrinsics.json   camera model
//   <dir>/poses.jsonl       one HeadPose per line
//   <dir>/frames/NNNNNN.bin little-endian float32 depth, row-major
//   <dir>/meta.json         {"fps": .., "frame_count": ..}

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "navi/pipeline.hpp"
#include "navi/scene_sim.hpp"
#include "navi/wire.hpp"

namespace navi {

namespace fs = std::filesystem;

struct ReplayMeta {
  double fps = 5.0;
  std::size_t frame_count = 0;
};

inline std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.bin", index);
  return buf;
}

/// Raw little-endian float32 bytes -> host floats.
inline std::vector<float> decode_depth_bytes(std::span<const unsigned char> bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[4 * i + b];
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

inline std::vector<unsigned char> encode_depth_bytes(std::span<const float> depth) {
  std::vector<unsigned char> out(depth.size() * 4);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(depth[i]);
    for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return out;
}

namespace detail {

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

class ReplayContainer {
 public:
  static ReplayContainer open(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw FormatError("replay container not found: " + dir.string());
    ReplayContainer c;
    c.dir_ = dir;
    c.intrinsics_ = intrinsics_from_json(detail::parse_json_file(dir / "intrinsics.json"));

    const json meta = detail::parse_json_file(dir / "meta.json");
    try {
      c.meta_.fps = meta.at("fps").get<double>();
      c.meta_.frame_count = meta.at("frame_count").get<std::size_t>();
    } catch (const json::exception& e) {
      throw FormatError("meta.json: " + std::string(e.what()));
    }
    if (!(c.meta_.fps > 0.0)) throw FormatError("meta.json: fps must be positive");

    std::istringstream lines(detail::read_file(dir / "poses.jsonl"));
    std::string line;
    for (std::size_t n = 1; std::getline(lines, line); ++n) {
      if (line.empty()) continue;
      try {
        c.poses_.push_back(pose_from_json(json::parse(line)));
      } catch (const json::parse_error& e) {
        throw FormatError("poses.jsonl line " + std::to_string(n) + ": " + e.what());
      } catch (const FormatError& e) {
        throw FormatError("poses.jsonl line " + std::to_string(n) + ": " + e.what());
      }
    }
    if (c.poses_.size() != c.meta_.frame_count) {
      throw FormatError("frame count " + std::to_string(c.meta_.frame_count) + " but " +
                        std::to_string(c.poses_.size()) + " poses");
    }
    const auto expected = static_cast<std::uintmax_t>(4 * c.intrinsics_.pixel_count());
    for (std::size_t i = 0; i < c.meta_.frame_count; ++i) {
      const fs::path f = c.frame_path(i);
      std::error_code ec;
      const auto size = fs::file_size(f, ec);
      if (ec) throw FormatError("missing frame " + f.string());
      if (size != expected) {
        throw FormatError(f.string() + ": " + std::to_string(size) + " bytes, expected " +
                          std::to_string(expected));
      }
    }
    return c;
  }

  const fs::path& dir() const { return dir_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  const ReplayMeta& meta() const { return meta_; }
  const std::vector<HeadPose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }

  fs::path frame_path(std::size_t i) const { return dir_ / "frames" / frame_file_name(i); }

  std::vector<unsigned char> frame_bytes(std::size_t i) const {
    const std::string raw = detail::read_file(frame_path(i));
    return {raw.begin(), raw.end()};
  }

  DepthFrame frame(std::size_t i) const {
    DepthFrame f;
    f.timestamp = poses_.at(i).timestamp;
    f.intrinsics = intrinsics_;
    f.depth = decode_depth_bytes(frame_bytes(i));
    return f;
  }

 private:
  fs::path dir_;
  CameraIntrinsics intrinsics_;
  ReplayMeta meta_;
  std::vector<HeadPose> poses_;
};

/// Writes a container; frame timestamps are taken from the poses.
inline void write_replay(const fs::path& dir, const CameraIntrinsics& intrinsics,
                         const std::vector<HeadPose>& poses, const std::vector<DepthFrame>& frames,
                         double fps) {
  if (poses.size() != frames.size()) throw std::invalid_argument("write_replay: poses/frames mismatch");
  fs::create_directories(dir / "frames");
  std::ofstream(dir / "intrinsics.json") << intrinsics_to_json(intrinsics).dump(2) << '\n';
  std::ofstream(dir / "meta.json") << json{{"fps", fps}, {"frame_count", frames.size()}}.dump(2) << '\n';
  std::ofstream pose_file(dir / "poses.jsonl");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    pose_file << pose_to_json(poses[i]).dump() << '\n';
    const auto bytes = encode_depth_bytes(frames[i].depth);
    std::ofstream(dir / "frames" / frame_file_name(i), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

/// Renders a scripted walk down a corridor scenario: the camera advances
/// `step_m` per frame along the corridor axis with a gentle yaw sway.
inline void write_corridor_replay(const fs::path& dir, std::size_t frames, std::uint64_t seed,
                                  double fps = 5.0, double step_m = 0.08) {
  const CorridorScenario scenario = corridor_scenario(seed, false);
  const CameraIntrinsics k = default_intrinsics();
  std::vector<HeadPose> poses;
  std::vector<DepthFrame> depth;
  for (std::size_t i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / fps;
    const double yaw = 10.0 * std::sin(0.3 * static_cast<double>(i));
    const HeadPose pose = look_pose(Vec3(step_m * static_cast<double>(i), 0.0, 1.6), yaw, 20.0, t);
    RenderOptions render;
    render.noise_stream = i;
    depth.push_back(render_depth(scenario.scene, pose, k, render));
    poses.push_back(pose);
  }
  write_replay(dir, k, poses, depth, fps);
}

// Replay run -------------------------------------------------------------------

struct LatencyStats {
  double p50 = 0.0;
  double p95 = 0.0;
};

/// Nearest-rank percentile.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

struct ReplayReport {
  std::size_t frames = 0;
  double wall_seconds = 0.0;
  double fps = 0.0;
  std::array<LatencyStats, kStageCount> stages{};
  LatencyStats pipeline;    // processing_ms per frame
  LatencyStats end_to_end;  // load + process per frame
  std::vector<FrameReport> reports;
  std::string obstacles_body;  // final GET /obstacles body
  SceneDump last_scene;
};

/// Streams every frame through a fresh pipeline as fast as possible.
inline ReplayReport run_replay(const ReplayContainer& container, const PipelineConfig& config) {
  using Clock = std::chrono::steady_clock;
  Pipeline pipeline(container.intrinsics(), config);
  ReplayReport report;
  std::array<std::vector<double>, kStageCount> stage_samples;
  std::vector<double> pipeline_ms;
  std::vector<double> e2e_ms;

  const auto start = Clock::now();
  for (std::size_t i = 0; i < container.size(); ++i) {
    const auto t0 = Clock::now();
    const DepthFrame frame = container.frame(i);
    FrameReport r = pipeline.process(frame, container.poses()[i]);
    e2e_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    pipeline_ms.push_back(r.processing_ms);
    for (std::size_t s = 0; s < kStageCount; ++s) stage_samples[s].push_back(r.stage_ms[s]);
    report.reports.push_back(std::move(r));
  }
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  report.frames = container.size();
  report.fps = report.wall_seconds > 0.0 ? static_cast<double>(report.frames) / report.wall_seconds : 0.0;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    report.stages[s] = {percentile(stage_samples[s], 0.50), percentile(stage_samples[s], 0.95)};
  }
  report.pipeline = {percentile(pipeline_ms, 0.50), percentile(pipeline_ms, 0.95)};
  report.end_to_end = {percentile(e2e_ms, 0.50), percentile(e2e_ms, 0.95)};
  report.obstacles_body = obstacles_json(pipeline.map()).dump();
  report.last_scene = pipeline.last_scene();
  return report;
}

inline void write_bench(std::ostream& out, const ReplayReport& r) {
  out << std::fixed << std::setprecision(2);
  out << "frames: " << r.frames << "\n";
  out << "stage            p50_ms    p95_ms\n";
  for (std::size_t s = 0; s < kStageCount; ++s) {
    out << std::left << std::setw(14) << kStageNames[s] << std::right << std::setw(10) << r.stages[s].p50
        << std::setw(10) << r.stages[s].p95 << "\n";
  }
  out << std::left << std::setw(14) << "pipeline" << std::right << std::setw(10) << r.pipeline.p50
      << std::setw(10) << r.pipeline.p95 << "\n";
  out << std::left << std::setw(14) << "end_to_end" << std::right << std::setw(10) << r.end_to_end.p50
      << std::setw(10) << r.end_to_end.p95 << "\n";
  out << "fps: " << r.fps << "\n";
}

/// CSV with columns x,y,z,label; label is floor, noise or cluster_<id>.
inline void write_scene_csv(std::ostream& out, const SceneDump& scene) {
  out << "x,y,z,label\n";
  out << std::setprecision(9);
  for (const Vec3& p : scene.floor.points) out << p.x() << ',' << p.y() << ',' << p.z() << ",floor\n";
  for (std::size_t i = 0; i < scene.rest.size(); ++i) {
    const Vec3& p = scene.rest.points[i];
    const int label = i < scene.labeling.labels.size() ? scene.labeling.labels[i] : ClusterLabeling::kNoise;
    out << p.x() << ',' << p.y() << ',' << p.z() << ','
        << (label == ClusterLabeling::kNoise ? std::string("noise") : "cluster_" + std::to_string(label))
        << '\n';
  }
}

}  // namespace navi
