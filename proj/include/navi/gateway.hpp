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

// HTTP/JSON front end.
//
//   POST /session    {"intrinsics": {...}}                 starts (or resets) the session
//   POST /frames     {"timestamp", "pose", "depth": b64}   -> {frame_id, obstacles_total, processing_ms, warnings}
//   GET  /heading    ?x=&y=&desired=                       -> HeadingResult
//   GET  /obstacles                                        -> [Obstacle]
//   POST /nav/plan   directions-response document          -> {"steps": n}
//   POST /nav/fix    {"lat", "lon"}                        -> {"instruction", "current_step", "finished"}
//
// Frame ingestion is serialized in arrival order onto the single map writer.
// Reads are served from immutable snapshots.

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "navi/base64.hpp"
#include "navi/pipeline.hpp"
#include "navi/replay.hpp"
#include "navi/transit_nav.hpp"
#include "navi/wire.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace navi {

struct HttpResponse {
  int status = 200;
  std::string body;
};

namespace detail {

inline HttpResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

/// Ticket lock: holders are admitted strictly in the order they took tickets.
class FifoGate {
 public:
  std::uint64_t take() {
    std::lock_guard lock(mutex_);
    return next_ticket_++;
  }
  void wait(std::uint64_t ticket) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return serving_ == ticket; });
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      ++serving_;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
};

class GateTurn {
 public:
  explicit GateTurn(FifoGate& gate) : gate_(gate) { gate_.wait(gate_.take()); }
  ~GateTurn() { gate_.release(); }
  GateTurn(const GateTurn&) = delete;
  GateTurn& operator=(const GateTurn&) = delete;

 private:
  FifoGate& gate_;
};

inline std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

class Gateway {
 public:
  explicit Gateway(SessionConfig config) : config_(std::move(config)) { config_.validate(); }

  const SessionConfig& config() const { return config_; }

  HttpResponse create_session(std::string_view body) {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      return detail::error_response(400, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("intrinsics")) {
      return detail::error_response(400, "missing intrinsics");
    }
    CameraIntrinsics intrinsics;
    try {
      intrinsics = intrinsics_from_json(doc.at("intrinsics"));
    } catch (const FormatError& e) {
      return detail::error_response(400, e.what());
    }

    detail::GateTurn turn(ingest_gate_);
    pipeline_ = std::make_unique<Pipeline>(intrinsics, config_.pipeline);
    publish();
    return {200, json{{"status", "ok"}, {"intrinsics", intrinsics_to_json(intrinsics)}}.dump()};
  }

  HttpResponse ingest_frame(std::string_view body) {
    if (body.size() > config_.max_body_bytes) return detail::error_response(413, "frame too large");
    if (pending_.fetch_add(1) >= config_.max_queue_depth) {
      pending_.fetch_sub(1);
      return detail::error_response(503, "ingest queue full");
    }
    struct PendingGuard {
      std::atomic<std::size_t>& n;
      ~PendingGuard() { n.fetch_sub(1); }
    } pending_guard{pending_};

    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      return detail::error_response(400, std::string("malformed JSON: ") + e.what());
    }

    detail::GateTurn turn(ingest_gate_);
    if (!pipeline_) return detail::error_response(409, "no session; POST /session first");

    DepthFrame frame;
    HeadPose pose;
    try {
      if (!doc.is_object()) throw FormatError("expected an object");
      if (!doc.contains("timestamp") || !doc.at("timestamp").is_number()) {
        throw FormatError("timestamp must be a number");
      }
      frame.timestamp = doc.at("timestamp").get<double>();
      if (!std::isfinite(frame.timestamp)) throw FormatError("timestamp must be finite");
      if (!doc.contains("pose") || !doc.at("pose").is_object()) throw FormatError("missing pose");
      json pose_doc = doc.at("pose");
      pose_doc["timestamp"] = frame.timestamp;
      pose = pose_from_json(pose_doc);
      if (!doc.contains("depth") || !doc.at("depth").is_string()) {
        throw FormatError("depth must be a base64 string");
      }
      const auto bytes = base64_decode(doc.at("depth").get_ref<const std::string&>());
      if (!bytes) throw FormatError("depth is not valid base64");
      frame.intrinsics = pipeline_->intrinsics();
      if (bytes->size() != 4 * frame.intrinsics.pixel_count()) {
        throw FormatError("depth payload has " + std::to_string(bytes->size()) + " bytes, expected " +
                          std::to_string(4 * frame.intrinsics.pixel_count()));
      }
      frame.depth = decode_depth_bytes(*bytes);
      for (float d : frame.depth) {
        if (!std::isfinite(d) || d < 0.0F) throw FormatError("depth samples must be finite and >= 0");
      }
    } catch (const FormatError& e) {
      return detail::error_response(400, e.what());
    }

    try {
      const FrameReport report = pipeline_->process(frame, pose);
      publish();
      return {200, json{{"frame_id", report.frame_id},
                        {"obstacles_total", report.obstacles_total},
                        {"processing_ms", report.processing_ms},
                        {"warnings", report.warnings}}
                       .dump()};
    } catch (const std::exception& e) {
      return detail::error_response(500, std::string("pipeline failure: ") + e.what());
    }
  }

  /// Query parameters as received; missing ones are empty.
  HttpResponse heading(const std::string& x, const std::string& y, const std::string& desired) const {
    const auto snap = snapshot();
    if (!snap) return detail::error_response(409, "no session; POST /session first");
    const auto px = detail::parse_number(x);
    const auto py = detail::parse_number(y);
    const auto pd = detail::parse_number(desired);
    if (!px || !py || !pd) return detail::error_response(400, "x, y and desired must be finite numbers");
    HeadingQuery query{Vec2(*px, *py), normalize_deg(*pd), snap->map->project_2d(config_.pipeline.slab)};
    return {200, heading_to_json(find_safe_heading(query, config_.pipeline.planner)).dump()};
  }

  HttpResponse obstacles() const {
    const auto snap = snapshot();
    if (!snap) return detail::error_response(409, "no session; POST /session first");
    return {200, obstacles_json(*snap->map).dump()};
  }

  HttpResponse nav_plan(std::string_view body) {
    try {
      TriggerState state = TriggerState::start(parse_plan(body));
      const std::size_t n = state.plan->steps.size();
      std::lock_guard lock(nav_mutex_);
      nav_ = std::move(state);
      return {200, json{{"steps", n}}.dump()};
    } catch (const PlanParseError& e) {
      return detail::error_response(400, e.what());
    }
  }

  HttpResponse nav_fix(std::string_view body) {
    GeoCoord fix;
    try {
      const json doc = json::parse(body);
      fix = {doc.at("lat").get<double>(), doc.at("lon").get<double>()};
    } catch (const json::exception& e) {
      return detail::error_response(400, std::string("expected {\"lat\", \"lon\"}: ") + e.what());
    }
    if (!fix.is_valid()) return detail::error_response(400, "coordinate out of range");
    std::lock_guard lock(nav_mutex_);
    if (!nav_) return detail::error_response(409, "no plan; POST /nav/plan first");
    json out;
    if (auto hit = next_instruction(*nav_, fix)) {
      out["instruction"] = hit->first;
      nav_ = std::move(hit->second);
    } else {
      out["instruction"] = nullptr;
    }
    out["current_step"] = nav_->current_step;
    out["finished"] = nav_->finished();
    return {200, out.dump()};
  }

  /// Registers every route on `server`.
  void mount(httplib::Server& server) {
    server.set_payload_max_length(config_.max_body_bytes);
    auto reply = [](httplib::Response& res, const HttpResponse& r) {
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Post("/session", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, create_session(req.body));
    });
    server.Post("/frames", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, ingest_frame(req.body));
    });
    server.Get("/heading", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, heading(req.get_param_value("x"), req.get_param_value("y"), req.get_param_value("desired")));
    });
    server.Get("/obstacles", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, obstacles());
    });
    server.Post("/nav/plan", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, nav_plan(req.body));
    });
    server.Post("/nav/fix", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, nav_fix(req.body));
    });
  }

 private:
  struct Snapshot {
    std::shared_ptr<const ObstacleMap> map;
  };

  std::optional<Snapshot> snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    if (!map_snapshot_) return std::nullopt;
    return Snapshot{map_snapshot_};
  }

  // Caller holds the ingest gate.
  void publish() {
    auto next = std::make_shared<const ObstacleMap>(pipeline_->map());
    std::lock_guard lock(snapshot_mutex_);
    map_snapshot_ = std::move(next);
  }

  SessionConfig config_;
  detail::FifoGate ingest_gate_;
  std::atomic<std::size_t> pending_{0};
  std::unique_ptr<Pipeline> pipeline_;  // guarded by ingest_gate_

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const ObstacleMap> map_snapshot_;

  std::mutex nav_mutex_;
  std::optional<TriggerState> nav_;
};

/// Encodes a frame as a POST /frames body.
inline std::string frame_request_body(const DepthFrame& frame, const HeadPose& pose) {
  json pose_doc = pose_to_json(pose);
  pose_doc.erase("timestamp");
  return json{{"timestamp", frame.timestamp},
              {"pose", pose_doc},
              {"depth", base64_encode(encode_depth_bytes(frame.depth))}}
      .dump();
}

inline std::string session_request_body(const CameraIntrinsics& intrinsics) {
  return json{{"intrinsics", intrinsics_to_json(intrinsics)}}.dump();
}

}  // namespace navi
