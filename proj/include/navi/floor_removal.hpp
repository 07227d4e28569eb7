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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "navi/frame_ingest.hpp"
#include "navi/geometry.hpp"

namespace navi {

/// Plane {p : normal . p = offset}, normal unit length and pointing up.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::size_t inlier_count = 0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct RansacParams {
  int iterations = 200;
  double inlier_threshold = 0.05;
  double horizontality_max_tilt = 10.0;  // degrees from +Z
  double min_inlier_fraction = 0.15;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("RansacParams: iterations must be >= 1");
    if (!(inlier_threshold > 0.0)) {
      throw std::invalid_argument("RansacParams: inlier_threshold must be positive");
    }
    if (!(horizontality_max_tilt > 0.0 && horizontality_max_tilt < 90.0)) {
      throw std::invalid_argument("RansacParams: horizontality_max_tilt must be in (0, 90)");
    }
    if (!(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
      throw std::invalid_argument("RansacParams: min_inlier_fraction must be in [0, 1]");
    }
  }
};

/// Angle between `normal` and +Z in degrees. Expects a unit vector.
inline double tilt_deg(const Vec3& normal) {
  return std::acos(std::clamp(std::abs(normal.z()), 0.0, 1.0)) * kRadToDeg;
}

namespace detail {

inline std::size_t count_inliers(const PointCloud& cloud, const Vec3& normal, double offset,
                                 double threshold) {
  std::size_t n = 0;
  for (const Vec3& p : cloud.points) {
    if (std::abs(normal.dot(p) - offset) <= threshold) ++n;
  }
  return n;
}

/// Total least squares plane through the inliers of (normal, offset).
inline std::optional<PlaneModel> refine_plane(const PointCloud& cloud, const Vec3& normal,
                                              double offset, double threshold) {
  Vec3 centroid = Vec3::Zero();
  std::size_t n = 0;
  for (const Vec3& p : cloud.points) {
    if (std::abs(normal.dot(p) - offset) <= threshold) {
      centroid += p;
      ++n;
    }
  }
  if (n < 3) return std::nullopt;
  centroid /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : cloud.points) {
    if (std::abs(normal.dot(p) - offset) <= threshold) {
      const Vec3 d = p - centroid;
      cov += d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  if (solver.info() != Eigen::Success) return std::nullopt;
  Vec3 refined = solver.eigenvectors().col(0).normalized();  // smallest eigenvalue
  if (refined.z() < 0.0) refined = -refined;
  if (!refined.allFinite()) return std::nullopt;
  return PlaneModel{refined, refined.dot(centroid), 0};
}

}  // namespace detail

/// Seeded RANSAC for the dominant near-horizontal plane.
///
/// Candidate planes from 3-point samples are discarded before inlier counting
/// when they tilt more than `horizontality_max_tilt` from +Z. The winner is
/// refined by least squares over its inliers. Returns nothing for clouds of
/// fewer than 3 points or when the best inlier fraction is below
/// `min_inlier_fraction`.
inline std::optional<PlaneModel> fit_floor(const PointCloud& cloud, const RansacParams& params) {
  params.validate();
  if (cloud.frame != FrameTag::grf) {
    throw std::invalid_argument("fit_floor: cloud must be in the GRF");
  }
  const std::size_t n = cloud.size();
  if (n < 3) return std::nullopt;

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::optional<PlaneModel> best;
  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    std::size_t k = pick(rng);
    if (i == j || i == k || j == k) continue;

    const Vec3& a = cloud.points[i];
    Vec3 normal = (cloud.points[j] - a).cross(cloud.points[k] - a);
    const double len = normal.norm();
    if (!(len > 1e-12)) continue;  // collinear sample
    normal /= len;
    if (normal.z() < 0.0) normal = -normal;
    if (tilt_deg(normal) > params.horizontality_max_tilt) continue;

    const double offset = normal.dot(a);
    const std::size_t inliers = detail::count_inliers(cloud, normal, offset, params.inlier_threshold);
    if (!best || inliers > best->inlier_count) best = PlaneModel{normal, offset, inliers};
  }
  if (!best) return std::nullopt;

  if (auto refined = detail::refine_plane(cloud, best->normal, best->offset,
                                          params.inlier_threshold);
      refined && tilt_deg(refined->normal) <= params.horizontality_max_tilt) {
    refined->inlier_count = detail::count_inliers(cloud, refined->normal, refined->offset,
                                                  params.inlier_threshold);
    best = refined;
  }

  const double fraction = static_cast<double>(best->inlier_count) / static_cast<double>(n);
  if (fraction < params.min_inlier_fraction) return std::nullopt;
  return best;
}

struct FloorSplit {
  PointCloud floor;
  PointCloud rest;
};

/// Partitions `cloud` by distance to `plane`; order within each part follows
/// the input.
inline FloorSplit split_floor(const PointCloud& cloud, const PlaneModel& plane, double threshold) {
  if (cloud.frame != FrameTag::grf) {
    throw std::invalid_argument("split_floor: cloud must be in the GRF");
  }
  FloorSplit out;
  out.floor.frame = FrameTag::grf;
  out.rest.frame = FrameTag::grf;
  for (const Vec3& p : cloud.points) {
    (std::abs(plane.signed_distance(p)) <= threshold ? out.floor : out.rest).points.push_back(p);
  }
  return out;
}

}  // namespace navi
