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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "navi/frame_ingest.hpp"
#include "navi/geometry.hpp"

namespace navi {

struct DbscanParams {
  double eps = 0.3;
  int min_pts = 8;

  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("DbscanParams: eps must be positive");
    if (min_pts < 1) throw std::invalid_argument("DbscanParams: min_pts must be >= 1");
  }
};

/// Per-point cluster ids: kNoise or 0..cluster_count-1.
struct ClusterLabeling {
  static constexpr int kNoise = -1;

  std::vector<int> labels;
  int cluster_count = 0;

  std::size_t noise_count() const {
    std::size_t n = 0;
    for (int l : labels) n += (l == kNoise);
    return n;
  }
};

namespace detail {

/// Uniform hash grid with cell size eps; a radius-eps query visits the 27
/// cells around the query point.
class UniformGrid {
 public:
  UniformGrid(const std::vector<Vec3>& points, double cell) : points_(points), cell_(cell) {
    cells_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) cells_[voxel_of(points[i], cell_)].push_back(i);
  }

  /// Calls `fn(j)` for every j with |p_j - p| <= radius (radius <= cell).
  template <typename Fn>
  void for_each_neighbor(const Vec3& p, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const VoxelKey c = voxel_of(p, cell_);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            if ((points_[j] - p).squaredNorm() <= r2) fn(j);
          }
        }
      }
    }
  }

 private:
  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<VoxelKey, std::vector<std::size_t>, VoxelKeyHash> cells_;
};

}  // namespace detail

/// DBSCAN with Euclidean distance. Neighborhoods are closed balls of radius
/// eps that include the point itself. Clusters are seeded from core points in
/// ascending index order and fully expanded before the next seed, so a border
/// point reachable from several clusters joins the earliest one.
inline ClusterLabeling dbscan(const PointCloud& cloud, const DbscanParams& params) {
  params.validate();
  const std::size_t n = cloud.size();
  ClusterLabeling out;
  out.labels.assign(n, ClusterLabeling::kNoise);
  if (n == 0) return out;

  const detail::UniformGrid grid(cloud.points, params.eps);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    grid.for_each_neighbor(cloud.points[i], params.eps, [&](std::size_t) { ++count; });
    core[i] = count >= params.min_pts;
  }

  std::vector<std::size_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || out.labels[seed] != ClusterLabeling::kNoise) continue;
    const int label = out.cluster_count++;
    out.labels[seed] = label;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const std::size_t i = frontier.back();
      frontier.pop_back();
      grid.for_each_neighbor(cloud.points[i], params.eps, [&](std::size_t j) {
        if (out.labels[j] != ClusterLabeling::kNoise) return;
        out.labels[j] = label;
        if (core[j]) frontier.push_back(j);
      });
    }
  }
  return out;
}

/// Tight box around the members of `label`. Throws std::out_of_range when no
/// point carries that label.
inline Aabb cluster_to_aabb(const PointCloud& cloud, const ClusterLabeling& labeling, int label) {
  if (labeling.labels.size() != cloud.size()) {
    throw std::invalid_argument("cluster_to_aabb: labeling does not match cloud");
  }
  bool found = false;
  Aabb box;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labeling.labels[i] != label) continue;
    if (!found) {
      box = {cloud.points[i], cloud.points[i]};
      found = true;
    } else {
      box.expand(cloud.points[i]);
    }
  }
  if (!found || label == ClusterLabeling::kNoise) {
    throw std::out_of_range("cluster_to_aabb: unknown cluster label " + std::to_string(label));
  }
  return box;
}

/// Boxes for every cluster, indexed by label, in a single pass.
inline std::vector<Aabb> cluster_boxes(const PointCloud& cloud, const ClusterLabeling& labeling) {
  std::vector<Aabb> boxes(static_cast<std::size_t>(labeling.cluster_count));
  std::vector<char> seen(boxes.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int l = labeling.labels[i];
    if (l < 0) continue;
    auto& box = boxes[static_cast<std::size_t>(l)];
    if (!seen[l]) {
      box = {cloud.points[i], cloud.points[i]};
      seen[l] = 1;
    } else {
      box.expand(cloud.points[i]);
    }
  }
  return boxes;
}

}  // namespace navi
