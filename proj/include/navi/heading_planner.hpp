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

// Local heading search over concentric safety rings.
//
// Yaw is measured in degrees counter-clockwise from GRF +x, seen from above.
// Clockwise therefore means decreasing yaw and a negative deviation.

#include <cmath>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "navi/geometry.hpp"
#include "navi/obstacle_map.hpp"

namespace navi {

struct PlannerParams {
  std::vector<double> ring_radii{0.5, 1.0, 1.5};
  double angular_step = 5.0;
  double clearance = 0.4;
  double max_deviation = 120.0;
  double guidance_distance = 1.5;
  double display_height = 1.6;  // z of the guidance point

  void validate() const {
    if (ring_radii.empty()) throw std::invalid_argument("PlannerParams: ring_radii is empty");
    for (std::size_t i = 0; i < ring_radii.size(); ++i) {
      if (!(ring_radii[i] > 0.0) || (i > 0 && !(ring_radii[i] > ring_radii[i - 1]))) {
        throw std::invalid_argument("PlannerParams: ring_radii must be positive and strictly ascending");
      }
    }
    if (!(angular_step > 0.0) || std::fmod(360.0, angular_step) != 0.0) {
      throw std::invalid_argument("PlannerParams: angular_step must divide 360 evenly");
    }
    if (!(max_deviation > 0.0 && max_deviation <= 180.0)) {
      throw std::invalid_argument("PlannerParams: max_deviation must be in (0, 180]");
    }
    if (!(clearance >= 0.0)) throw std::invalid_argument("PlannerParams: clearance must be >= 0");
    if (!(guidance_distance > 0.0)) {
      throw std::invalid_argument("PlannerParams: guidance_distance must be positive");
    }
  }
};

struct HeadingQuery {
  Vec2 position = Vec2::Zero();
  double desired_heading = 0.0;
  std::vector<FlatObstacle> obstacles;
};

enum class HeadingStatus { clear_ahead, deviated, blocked };

inline const char* to_string(HeadingStatus s) {
  switch (s) {
    case HeadingStatus::clear_ahead: return "clear_ahead";
    case HeadingStatus::deviated: return "deviated";
    case HeadingStatus::blocked: return "blocked";
  }
  return "unknown";
}

struct HeadingResult {
  double heading = 0.0;    // degrees, [0, 360)
  double deviation = 0.0;  // signed degrees from desired, clockwise negative
  Vec3 guidance_point = Vec3::Zero();
  HeadingStatus status = HeadingStatus::clear_ahead;
};

/// A heading is valid when every ring sample along it keeps strictly more
/// than `clearance` from every obstacle footprint.
inline bool is_heading_valid(const HeadingQuery& query, double heading,
                             const PlannerParams& params) {
  const SinCos dir = sincos_deg(heading);
  const double clearance_sq = params.clearance * params.clearance;
  for (double r : params.ring_radii) {
    const Vec2 sample(query.position.x() + r * dir.cos, query.position.y() + r * dir.sin);
    for (const FlatObstacle& o : query.obstacles) {
      if (!(distance_sq_to_rect(sample, o.rect) > clearance_sq)) return false;
    }
  }
  return true;
}

enum class ScanExecution { sequential, parallel };

namespace detail {

inline int max_step_index(const PlannerParams& params) {
  // The epsilon absorbs ratios such as 120 / 5 landing just below an integer.
  return static_cast<int>(std::floor(params.max_deviation / params.angular_step + 1e-9));
}

/// First k in [1, k_max] for which desired + sign * k * step is valid.
inline std::optional<int> directional_scan(const HeadingQuery& query, double desired, int sign,
                                           int k_max, const PlannerParams& params) {
  for (int k = 1; k <= k_max; ++k) {
    if (is_heading_valid(query, normalize_deg(desired + sign * k * params.angular_step), params)) {
      return k;
    }
  }
  return std::nullopt;
}

inline HeadingResult make_result(const HeadingQuery& query, double desired, int signed_k,
                                 const PlannerParams& params) {
  HeadingResult r;
  r.deviation = signed_k * params.angular_step;
  r.heading = normalize_deg(desired + r.deviation);
  r.status = signed_k == 0 ? HeadingStatus::clear_ahead : HeadingStatus::deviated;
  const SinCos dir = sincos_deg(r.heading);
  r.guidance_point = Vec3(query.position.x() + params.guidance_distance * dir.cos,
                          query.position.y() + params.guidance_distance * dir.sin,
                          params.display_height);
  return r;
}

}  // namespace detail

/// Smallest-deviation valid heading on the angular grid around the desired
/// heading. Candidates are visited as k = 0, -1, +1, -2, +2, ... steps, so
/// ties between equal deviations resolve to the clockwise side. With
/// ScanExecution::parallel the clockwise and counter-clockwise halves run as
/// two independent scans and are merged; the result is identical.
inline HeadingResult find_safe_heading(const HeadingQuery& query, const PlannerParams& params,
                                       ScanExecution execution = ScanExecution::sequential) {
  params.validate();
  const double desired = normalize_deg(query.desired_heading);
  if (is_heading_valid(query, desired, params)) return detail::make_result(query, desired, 0, params);

  const int k_max = detail::max_step_index(params);
  std::optional<int> signed_k;
  if (execution == ScanExecution::sequential) {
    for (int k = 1; k <= k_max && !signed_k; ++k) {
      if (is_heading_valid(query, normalize_deg(desired - k * params.angular_step), params)) {
        signed_k = -k;
      } else if (is_heading_valid(query, normalize_deg(desired + k * params.angular_step), params)) {
        signed_k = k;
      }
    }
  } else {
    auto ccw = std::async(std::launch::async, [&] {
      return detail::directional_scan(query, desired, +1, k_max, params);
    });
    const std::optional<int> cw = detail::directional_scan(query, desired, -1, k_max, params);
    const std::optional<int> ccw_k = ccw.get();
    if (cw && (!ccw_k || *cw <= *ccw_k)) {
      signed_k = -*cw;
    } else if (ccw_k) {
      signed_k = *ccw_k;
    }
  }

  if (signed_k) return detail::make_result(query, desired, *signed_k, params);

  HeadingResult blocked;
  blocked.heading = desired;
  blocked.deviation = 0.0;
  blocked.status = HeadingStatus::blocked;
  blocked.guidance_point = Vec3(query.position.x(), query.position.y(), params.display_height);
  return blocked;
}

}  // namespace navi
