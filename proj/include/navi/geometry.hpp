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
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

namespace navi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Axis-aligned box in meters. Valid iff min <= max componentwise.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  static Aabb from_corners(const Vec3& lo, const Vec3& hi) {
    Aabb box{lo, hi};
    if (!box.is_valid()) {
      throw std::invalid_argument("Aabb: min must not exceed max");
    }
    return box;
  }

  /// Box of the given size centered at `center`.
  static Aabb centered(const Vec3& center, const Vec3& size) {
    return from_corners(center - size / 2.0, center + size / 2.0);
  }

  bool is_valid() const {
    return min.allFinite() && max.allFinite() && (min.array() <= max.array()).all();
  }
  Vec3 center() const { return (min + max) / 2.0; }
  Vec3 size() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  bool operator==(const Aabb&) const = default;
};

/// Axis-aligned rectangle in the ground plane.
struct Rect2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool is_valid() const {
    return min.allFinite() && max.allFinite() && (min.array() <= max.array()).all();
  }
  Vec2 center() const { return (min + max) / 2.0; }

  bool operator==(const Rect2&) const = default;
};

/// Squared Euclidean distance from a point to a rectangle; zero inside.
inline double distance_sq_to_rect(const Vec2& p, const Rect2& r) {
  const double dx = std::max({r.min.x() - p.x(), 0.0, p.x() - r.max.x()});
  const double dy = std::max({r.min.y() - p.y(), 0.0, p.y() - r.max.y()});
  return dx * dx + dy * dy;
}

inline double distance_to_rect(const Vec2& p, const Rect2& r) {
  return std::sqrt(distance_sq_to_rect(p, r));
}

/// Maps any angle in degrees to [0, 360).
inline double normalize_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;  // fmod of a tiny negative can round up to 360
  return r;
}

/// Maps any angle in degrees to (-180, 180].
inline double wrap_deg_signed(double deg) {
  double r = normalize_deg(deg);
  return r > 180.0 ? r - 360.0 : r;
}

struct SinCos {
  double sin;
  double cos;
};

/// sin/cos of an angle in degrees with exact quadrant reduction, so that
/// angles differing by multiples of 90 degrees yield bit-identical
/// (permuted, negated) results.
inline SinCos sincos_deg(double deg) {
  const double r = normalize_deg(deg);
  const int quadrant = std::min(3, static_cast<int>(r / 90.0));
  const double rem = (r - 90.0 * quadrant) * kDegToRad;
  const double s = std::sin(rem);
  const double c = std::cos(rem);
  switch (quadrant) {
    case 0: return {s, c};
    case 1: return {c, -s};
    case 2: return {-s, -c};
    default: return {-c, s};
  }
}

}  // namespace navi
