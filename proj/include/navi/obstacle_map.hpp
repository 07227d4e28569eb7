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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "navi/geometry.hpp"

namespace navi {

/// Raised when a serialized payload cannot be decoded.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Obstacle {
  std::uint64_t id = 0;
  Aabb box;
  std::uint64_t observations = 1;
  double first_seen = 0.0;
  double last_seen = 0.0;

  bool operator==(const Obstacle&) const = default;
};

struct MergePolicy {
  double merge_center_dist = 0.5;
  double expiry = 10.0;
  double smoothing = 0.7;

  void validate() const {
    if (!(merge_center_dist >= 0.0)) {
      throw std::invalid_argument("MergePolicy: merge_center_dist must be >= 0");
    }
    if (!(expiry > 0.0)) throw std::invalid_argument("MergePolicy: expiry must be positive");
    if (!(smoothing >= 0.0 && smoothing <= 1.0)) {
      throw std::invalid_argument("MergePolicy: smoothing must be in [0, 1]");
    }
  }

  bool operator==(const MergePolicy&) const = default;
};

struct FlatObstacle {
  std::uint64_t id = 0;
  Rect2 rect;

  bool operator==(const FlatObstacle&) const = default;
};

struct HeightSlab {
  double min_z = 0.1;
  double max_z = 2.2;
};

/// Persistent list of obstacles in the GRF.
///
/// A detection merges into the obstacle with the nearest box center within
/// `merge_center_dist`; pairs are matched greedily by ascending center
/// distance so that each side takes part in at most one merge per call.
/// Unmatched detections become new obstacles. Ids are never reused.
class ObstacleMap {
 public:
  static constexpr int kFormatVersion = 1;

  explicit ObstacleMap(MergePolicy policy = {}) : policy_(policy) { policy_.validate(); }

  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  std::uint64_t next_id() const { return next_id_; }
  const MergePolicy& policy() const { return policy_; }
  std::size_t size() const { return obstacles_.size(); }
  bool empty() const { return obstacles_.empty(); }

  const Obstacle* find(std::uint64_t id) const {
    auto it = std::find_if(obstacles_.begin(), obstacles_.end(),
                           [id](const Obstacle& o) { return o.id == id; });
    return it == obstacles_.end() ? nullptr : &*it;
  }

  void integrate(std::span<const Aabb> detections, double now) {
    struct Candidate {
      double dist;
      std::size_t detection;
      std::size_t obstacle;
    };
    std::vector<Candidate> candidates;
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (!detections[d].is_valid()) {
        throw std::invalid_argument("ObstacleMap::integrate: invalid detection box");
      }
      const Vec3 c = detections[d].center();
      for (std::size_t o = 0; o < obstacles_.size(); ++o) {
        const double dist = (obstacles_[o].box.center() - c).norm();
        if (dist <= policy_.merge_center_dist) candidates.push_back({dist, d, o});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.dist, a.detection, a.obstacle) < std::tie(b.dist, b.detection, b.obstacle);
    });

    std::vector<char> detection_used(detections.size(), 0);
    std::vector<char> obstacle_used(obstacles_.size(), 0);
    const double s = policy_.smoothing;
    for (const Candidate& c : candidates) {
      if (detection_used[c.detection] || obstacle_used[c.obstacle]) continue;
      detection_used[c.detection] = obstacle_used[c.obstacle] = 1;
      Obstacle& o = obstacles_[c.obstacle];
      const Aabb& det = detections[c.detection];
      o.box.min = s * o.box.min + (1.0 - s) * det.min;
      o.box.max = s * o.box.max + (1.0 - s) * det.max;
      ++o.observations;
      o.last_seen = std::max(o.last_seen, now);
    }

    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (detection_used[d]) continue;
      obstacles_.push_back({next_id_++, detections[d], 1, now, now});
    }
  }

  /// Drops obstacles not seen for longer than the expiry window.
  void expire(double now) {
    std::erase_if(obstacles_,
                  [&](const Obstacle& o) { return now - o.last_seen > policy_.expiry; });
  }

  /// Ground footprints of obstacles whose z-extent meets the slab.
  std::vector<FlatObstacle> project_2d(double slab_min_z, double slab_max_z) const {
    if (!(slab_min_z < slab_max_z)) {
      throw std::invalid_argument("project_2d: slab_min_z must be below slab_max_z");
    }
    std::vector<FlatObstacle> out;
    for (const Obstacle& o : obstacles_) {
      if (o.box.max.z() < slab_min_z || o.box.min.z() > slab_max_z) continue;
      out.push_back({o.id, Rect2{o.box.min.head<2>(), o.box.max.head<2>()}});
    }
    return out;
  }

  std::vector<FlatObstacle> project_2d(const HeightSlab& slab) const {
    return project_2d(slab.min_z, slab.max_z);
  }

  /// Rebuilds a map from decoded state, checking every invariant.
  static ObstacleMap restore(std::vector<Obstacle> obstacles, std::uint64_t next_id,
                             MergePolicy policy = {}) {
    ObstacleMap map(policy);
    std::vector<std::uint64_t> ids;
    for (const Obstacle& o : obstacles) {
      if (o.observations < 1) throw FormatError("obstacle " + std::to_string(o.id) + ": observations < 1");
      if (!(o.last_seen >= o.first_seen)) {
        throw FormatError("obstacle " + std::to_string(o.id) + ": last_seen before first_seen");
      }
      if (!o.box.is_valid()) throw FormatError("obstacle " + std::to_string(o.id) + ": invalid box");
      if (o.id >= next_id) throw FormatError("obstacle " + std::to_string(o.id) + ": id >= next_id");
      ids.push_back(o.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw FormatError("duplicate obstacle id");
    }
    map.obstacles_ = std::move(obstacles);
    map.next_id_ = next_id;
    return map;
  }

  bool operator==(const ObstacleMap&) const = default;

 private:
  std::vector<Obstacle> obstacles_;
  std::uint64_t next_id_ = 0;
  MergePolicy policy_;
};

inline ObstacleMap integrate(ObstacleMap map, std::span<const Aabb> detections, double now) {
  map.integrate(detections, now);
  return map;
}

inline ObstacleMap expire(ObstacleMap map, double now) {
  map.expire(now);
  return map;
}

inline std::vector<FlatObstacle> project_2d(const ObstacleMap& map, double slab_min_z,
                                            double slab_max_z) {
  return map.project_2d(slab_min_z, slab_max_z);
}

// JSON encoding ------------------------------------------------------------

inline nlohmann::json to_json(const Obstacle& o) {
  return {{"id", o.id},
          {"box",
           {{"min", {o.box.min.x(), o.box.min.y(), o.box.min.z()}},
            {"max", {o.box.max.x(), o.box.max.y(), o.box.max.z()}}}},
          {"observations", o.observations},
          {"first_seen", o.first_seen},
          {"last_seen", o.last_seen}};
}

/// The obstacle list as served to clients.
inline nlohmann::json obstacles_json(const ObstacleMap& map) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Obstacle& o : map.obstacles()) arr.push_back(to_json(o));
  return arr;
}

inline std::string save_map(const ObstacleMap& map) {
  nlohmann::json doc = {{"version", ObstacleMap::kFormatVersion},
                        {"next_id", map.next_id()},
                        {"obstacles", obstacles_json(map)}};
  return doc.dump();
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError("missing field " + where + "." + key);
  }
  return obj.at(key);
}

inline Vec3 vec3_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw FormatError(where + ": expected [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline double number_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw FormatError(where + ": expected a number");
  return j.get<double>();
}

inline std::uint64_t count_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw FormatError(where + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

}  // namespace detail

inline ObstacleMap load_map(std::string_view bytes, MergePolicy policy = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("obstacle map is not valid JSON: ") + e.what());
  }
  const auto& version = detail::require(doc, "version", "$");
  if (!version.is_number_integer() || version.get<int>() != ObstacleMap::kFormatVersion) {
    throw FormatError("unsupported obstacle map version " + version.dump());
  }
  const std::uint64_t next_id = detail::count_from_json(detail::require(doc, "next_id", "$"), "$.next_id");
  const auto& list = detail::require(doc, "obstacles", "$");
  if (!list.is_array()) throw FormatError("$.obstacles: expected an array");

  std::vector<Obstacle> obstacles;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "$.obstacles[" + std::to_string(i) + "]";
    const auto& item = list[i];
    Obstacle o;
    o.id = detail::count_from_json(detail::require(item, "id", where), where + ".id");
    const auto& box = detail::require(item, "box", where);
    o.box.min = detail::vec3_from_json(detail::require(box, "min", where + ".box"), where + ".box.min");
    o.box.max = detail::vec3_from_json(detail::require(box, "max", where + ".box"), where + ".box.max");
    o.observations = detail::count_from_json(detail::require(item, "observations", where),
                                             where + ".observations");
    o.first_seen = detail::number_from_json(detail::require(item, "first_seen", where),
                                            where + ".first_seen");
    o.last_seen = detail::number_from_json(detail::require(item, "last_seen", where),
                                           where + ".last_seen");
    obstacles.push_back(o);
  }
  return ObstacleMap::restore(std::move(obstacles), next_id, policy);
}

/// Single-writer, many-reader holder. Readers get immutable snapshots that
/// stay valid while the writer publishes newer versions.
class MapStore {
 public:
  explicit MapStore(MergePolicy policy = {})
      : current_(std::make_shared<const ObstacleMap>(policy)) {}

  std::shared_ptr<const ObstacleMap> snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
  }

  void publish(ObstacleMap next) {
    auto ptr = std::make_shared<const ObstacleMap>(std::move(next));
    std::lock_guard lock(mutex_);
    current_ = std::move(ptr);
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ObstacleMap> current_;
};

}  // namespace navi
