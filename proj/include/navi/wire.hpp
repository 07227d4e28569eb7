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

// JSON shapes shared by the replay container, the HTTP service and the
// session config file.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "navi/frame_ingest.hpp"
#include "navi/heading_planner.hpp"
#include "navi/obstacle_map.hpp"
#include "navi/pipeline.hpp"

namespace navi {

using nlohmann::json;

inline json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"width", k.width}, {"height", k.height}, {"fx", k.fx},
          {"fy", k.fy},       {"cx", k.cx},         {"cy", k.cy}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  try {
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("intrinsics: ") + e.what());
  }
  try {
    k.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return k;
}

/// {"timestamp": t, "rotation": [9 values, row-major], "translation": [x, y, z]}
inline json pose_to_json(const HeadPose& p) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
  }
  return {{"timestamp", p.timestamp},
          {"rotation", rot},
          {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

inline HeadPose pose_from_json(const json& j) {
  HeadPose p;
  try {
    p.timestamp = j.at("timestamp").get<double>();
    const json& rot = j.at("rotation");
    const json& tr = j.at("translation");
    if (!rot.is_array() || rot.size() != 9) throw FormatError("pose: rotation needs 9 values");
    if (!tr.is_array() || tr.size() != 3) throw FormatError("pose: translation needs 3 values");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot.at(3 * r + c).get<double>();
    }
    for (int i = 0; i < 3; ++i) p.translation[i] = tr.at(i).get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("pose: ") + e.what());
  }
  if (!p.is_valid()) throw FormatError("pose: rotation is not a proper rotation matrix");
  return p;
}

inline json heading_to_json(const HeadingResult& r) {
  return {{"heading", r.heading},
          {"deviation", r.deviation},
          {"status", to_string(r.status)},
          {"guidance_point", {r.guidance_point.x(), r.guidance_point.y(), r.guidance_point.z()}}};
}

// Session configuration -----------------------------------------------------

/// Everything a running service needs. Loaded from a versioned JSON file in
/// which every field is optional.
struct SessionConfig {
  static constexpr int kVersion = 1;
  static constexpr const char* kListenEnv = "NAVI_LISTEN_ADDRESS";

  std::string listen_address = "127.0.0.1:8080";
  PipelineConfig pipeline;
  std::size_t max_queue_depth = 8;
  std::size_t max_body_bytes = 8u << 20;
  std::optional<std::string> replay_path;

  void validate() const {
    pipeline.validate();
    if (max_queue_depth == 0) throw std::invalid_argument("SessionConfig: max_queue_depth must be >= 1");
    if (listen_address.rfind(':') == std::string::npos) {
      throw std::invalid_argument("SessionConfig: listen_address must be host:port");
    }
  }

  std::string host() const { return listen_address.substr(0, listen_address.rfind(':')); }
  int port() const { return std::stoi(listen_address.substr(listen_address.rfind(':') + 1)); }
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                           const std::string& where) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw FormatError("config: unknown key " + where + key);
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

inline SessionConfig session_config_from_json(const json& doc) {
  SessionConfig cfg;
  try {
    if (!doc.is_object()) throw FormatError("config: expected an object");
    detail::reject_unknown(doc,
                           {"version", "listen_address", "voxel_size", "depth_range", "ransac", "dbscan",
                            "merge", "slab", "planner", "max_queue_depth", "max_body_bytes", "replay_path"},
                           "");
    if (!doc.contains("version") || doc.at("version").get<int>() != SessionConfig::kVersion) {
      throw FormatError("config: version must be " + std::to_string(SessionConfig::kVersion));
    }
    PipelineConfig& p = cfg.pipeline;
    detail::read_opt(doc, "listen_address", cfg.listen_address);
    detail::read_opt(doc, "voxel_size", p.voxel_size);
    detail::read_opt(doc, "max_queue_depth", cfg.max_queue_depth);
    detail::read_opt(doc, "max_body_bytes", cfg.max_body_bytes);
    if (doc.contains("replay_path") && !doc.at("replay_path").is_null()) {
      cfg.replay_path = doc.at("replay_path").get<std::string>();
    }
    if (doc.contains("depth_range")) {
      const json& d = doc.at("depth_range");
      detail::reject_unknown(d, {"min", "max"}, "depth_range.");
      detail::read_opt(d, "min", p.depth_range.min_depth);
      detail::read_opt(d, "max", p.depth_range.max_depth);
    }
    if (doc.contains("ransac")) {
      const json& r = doc.at("ransac");
      detail::reject_unknown(r, {"iterations", "inlier_threshold", "horizontality_max_tilt",
                                 "min_inlier_fraction", "seed", "lock_floor"},
                             "ransac.");
      detail::read_opt(r, "iterations", p.ransac.iterations);
      detail::read_opt(r, "inlier_threshold", p.ransac.inlier_threshold);
      detail::read_opt(r, "horizontality_max_tilt", p.ransac.horizontality_max_tilt);
      detail::read_opt(r, "min_inlier_fraction", p.ransac.min_inlier_fraction);
      detail::read_opt(r, "seed", p.ransac.seed);
      detail::read_opt(r, "lock_floor", p.lock_floor);
    }
    if (doc.contains("dbscan")) {
      const json& d = doc.at("dbscan");
      detail::reject_unknown(d, {"eps", "min_pts"}, "dbscan.");
      detail::read_opt(d, "eps", p.dbscan.eps);
      detail::read_opt(d, "min_pts", p.dbscan.min_pts);
    }
    if (doc.contains("merge")) {
      const json& m = doc.at("merge");
      detail::reject_unknown(m, {"merge_center_dist", "expiry", "smoothing"}, "merge.");
      detail::read_opt(m, "merge_center_dist", p.merge.merge_center_dist);
      detail::read_opt(m, "expiry", p.merge.expiry);
      detail::read_opt(m, "smoothing", p.merge.smoothing);
    }
    if (doc.contains("slab")) {
      const json& s = doc.at("slab");
      detail::reject_unknown(s, {"min_z", "max_z"}, "slab.");
      detail::read_opt(s, "min_z", p.slab.min_z);
      detail::read_opt(s, "max_z", p.slab.max_z);
    }
    if (doc.contains("planner")) {
      const json& pl = doc.at("planner");
      detail::reject_unknown(pl, {"ring_radii", "angular_step", "clearance", "max_deviation",
                                  "guidance_distance", "display_height"},
                             "planner.");
      detail::read_opt(pl, "ring_radii", p.planner.ring_radii);
      detail::read_opt(pl, "angular_step", p.planner.angular_step);
      detail::read_opt(pl, "clearance", p.planner.clearance);
      detail::read_opt(pl, "max_deviation", p.planner.max_deviation);
      detail::read_opt(pl, "guidance_distance", p.planner.guidance_distance);
      detail::read_opt(pl, "display_height", p.planner.display_height);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return cfg;
}

inline json session_config_to_json(const SessionConfig& cfg) {
  const PipelineConfig& p = cfg.pipeline;
  return {{"version", SessionConfig::kVersion},
          {"listen_address", cfg.listen_address},
          {"voxel_size", p.voxel_size},
          {"depth_range", {{"min", p.depth_range.min_depth}, {"max", p.depth_range.max_depth}}},
          {"ransac",
           {{"iterations", p.ransac.iterations},
            {"inlier_threshold", p.ransac.inlier_threshold},
            {"horizontality_max_tilt", p.ransac.horizontality_max_tilt},
            {"min_inlier_fraction", p.ransac.min_inlier_fraction},
            {"seed", p.ransac.seed},
            {"lock_floor", p.lock_floor}}},
          {"dbscan", {{"eps", p.dbscan.eps}, {"min_pts", p.dbscan.min_pts}}},
          {"merge",
           {{"merge_center_dist", p.merge.merge_center_dist},
            {"expiry", p.merge.expiry},
            {"smoothing", p.merge.smoothing}}},
          {"slab", {{"min_z", p.slab.min_z}, {"max_z", p.slab.max_z}}},
          {"planner",
           {{"ring_radii", p.planner.ring_radii},
            {"angular_step", p.planner.angular_step},
            {"clearance", p.planner.clearance},
            {"max_deviation", p.planner.max_deviation},
            {"guidance_distance", p.planner.guidance_distance},
            {"display_height", p.planner.display_height}}},
          {"max_queue_depth", cfg.max_queue_depth},
          {"max_body_bytes", cfg.max_body_bytes},
          {"replay_path", cfg.replay_path ? json(*cfg.replay_path) : json(nullptr)}};
}

inline void apply_env_overrides(SessionConfig& cfg) {
  if (const char* env = std::getenv(SessionConfig::kListenEnv); env && *env) {
    cfg.listen_address = env;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string(SessionConfig::kListenEnv) + ": " + e.what());
    }
  }
}

/// Reads a config file; NAVI_LISTEN_ADDRESS, when set, overrides the listen
/// address.
inline SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  SessionConfig cfg = session_config_from_json(doc);
  apply_env_overrides(cfg);
  return cfg;
}

}  // namespace navi
