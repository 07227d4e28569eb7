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

// Depth frame -> registered point cloud.
//
// Camera frame: +x right, +y down, +z forward (pinhole). The global
// reference frame (GRF) is gravity aligned with +z up and is fixed when
// the session starts.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "navi/geometry.hpp"

namespace navi {

struct CameraIntrinsics {
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  void validate() const {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("CameraIntrinsics: width and height must be positive");
    }
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
    }
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
      throw std::invalid_argument("CameraIntrinsics: principal point outside the image");
    }
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Row-major metric depth grid. A sample of 0.0 marks an invalid pixel.
struct DepthFrame {
  double timestamp = 0.0;
  std::vector<float> depth;
  CameraIntrinsics intrinsics;

  float at(int u, int v) const {
    return depth[static_cast<std::size_t>(v) * intrinsics.width + u];
  }
};

/// Rigid camera -> GRF transform.
struct HeadPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double timestamp = 0.0;

  static constexpr double kOrthonormalTolerance = 1e-6;

  bool is_valid() const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kOrthonormalTolerance) return false;
    return std::abs(rotation.determinant() - 1.0) <= kOrthonormalTolerance;
  }

  void validate() const {
    if (!is_valid()) {
      throw std::invalid_argument("HeadPose: rotation must be orthonormal with determinant +1");
    }
  }

  /// The GRF -> camera transform.
  HeadPose inverse() const {
    HeadPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    inv.timestamp = timestamp;
    return inv;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

enum class FrameTag { camera, grf };

inline const char* to_string(FrameTag tag) {
  return tag == FrameTag::camera ? "camera" : "grf";
}

struct PointCloud {
  std::vector<Vec3> points;
  FrameTag frame = FrameTag::camera;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct DepthRange {
  double min_depth = 0.25;
  double max_depth = 7.5;
};

inline constexpr double kDefaultVoxelSize = 0.10;

/// Pinhole back-projection of every pixel whose depth lies in
/// (min_depth, max_depth]. Output preserves row-major pixel order.
inline PointCloud back_project(const DepthFrame& frame, double min_depth = 0.25,
                               double max_depth = 7.5) {
  if (!(min_depth >= 0.0) || !(max_depth > min_depth)) {
    throw std::invalid_argument("back_project: need 0 <= min_depth < max_depth");
  }
  const CameraIntrinsics& k = frame.intrinsics;
  k.validate();
  if (frame.depth.size() != k.pixel_count()) {
    throw std::invalid_argument("back_project: depth grid has " +
                                std::to_string(frame.depth.size()) + " samples, intrinsics expect " +
                                std::to_string(k.pixel_count()));
  }

  PointCloud cloud;
  cloud.frame = FrameTag::camera;
  cloud.points.reserve(frame.depth.size());
  const double inv_fx = 1.0 / k.fx;
  const double inv_fy = 1.0 / k.fy;
  std::size_t i = 0;
  for (int v = 0; v < k.height; ++v) {
    const double ry = (v - k.cy) * inv_fy;
    for (int u = 0; u < k.width; ++u, ++i) {
      const double d = frame.depth[i];
      // NaN and negative samples fail this test as well.
      if (!(d > min_depth && d <= max_depth)) continue;
      cloud.points.emplace_back((u - k.cx) * inv_fx * d, ry * d, d);
    }
  }
  return cloud;
}

inline PointCloud back_project(const DepthFrame& frame, const DepthRange& range) {
  return back_project(frame, range.min_depth, range.max_depth);
}

inline PointCloud transform_to_grf(const PointCloud& cloud, const HeadPose& pose) {
  if (cloud.frame != FrameTag::camera) {
    throw std::invalid_argument("transform_to_grf: cloud is not in the camera frame");
  }
  pose.validate();
  PointCloud out;
  out.frame = FrameTag::grf;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(pose.apply(p));
  return out;
}

inline PointCloud transform_to_camera(const PointCloud& cloud, const HeadPose& pose) {
  if (cloud.frame != FrameTag::grf) {
    throw std::invalid_argument("transform_to_camera: cloud is not in the GRF");
  }
  pose.validate();
  const HeadPose inv = pose.inverse();
  PointCloud out;
  out.frame = FrameTag::camera;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(inv.apply(p));
  return out;
}

struct VoxelKey {
  std::int64_t x;
  std::int64_t y;
  std::int64_t z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Origin-anchored cell containing `p`.
inline VoxelKey voxel_of(const Vec3& p, double voxel_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

/// One centroid per occupied voxel, emitted in order of first occupancy.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw std::invalid_argument("voxel_downsample: voxel_size must be positive");
  }
  struct Bucket {
    VoxelKey key;
    Vec3 sum;
    Vec3 first;
    std::size_t count;
  };
  std::vector<Bucket> buckets;
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> index;
  index.reserve(cloud.size() / 2 + 1);

  for (const Vec3& p : cloud.points) {
    const VoxelKey key = voxel_of(p, voxel_size);
    auto [it, inserted] = index.try_emplace(key, buckets.size());
    if (inserted) {
      buckets.push_back({key, p, p, 1});
    } else {
      Bucket& b = buckets[it->second];
      b.sum += p;
      ++b.count;
    }
  }

  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(buckets.size());
  for (const Bucket& b : buckets) {
    Vec3 centroid = b.sum / static_cast<double>(b.count);
    // Rounding can push a centroid of boundary points into the neighbor cell.
    if (!(voxel_of(centroid, voxel_size) == b.key)) centroid = b.first;
    out.points.push_back(centroid);
  }
  return out;
}

}  // namespace navi
