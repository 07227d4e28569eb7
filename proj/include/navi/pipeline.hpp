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

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "navi/floor_removal.hpp"
#include "navi/frame_ingest.hpp"
#include "navi/heading_planner.hpp"
#include "navi/obstacle_clustering.hpp"
#include "navi/obstacle_map.hpp"

namespace navi {

struct PipelineConfig {
  DepthRange depth_range;
  double voxel_size = kDefaultVoxelSize;
  RansacParams ransac;
  // Reuse the first fitted floor for the whole session instead of re-fitting
  // every frame.
  bool lock_floor = false;
  DbscanParams dbscan;
  MergePolicy merge;
  HeightSlab slab;
  PlannerParams planner;

  void validate() const {
    if (!(depth_range.min_depth >= 0.0) || !(depth_range.max_depth > depth_range.min_depth)) {
      throw std::invalid_argument("PipelineConfig: need 0 <= min_depth < max_depth");
    }
    if (!(voxel_size > 0.0)) throw std::invalid_argument("PipelineConfig: voxel_size must be positive");
    if (!(slab.min_z < slab.max_z)) throw std::invalid_argument("PipelineConfig: empty height slab");
    ransac.validate();
    dbscan.validate();
    merge.validate();
    planner.validate();
  }
};

enum class Stage : std::size_t {
  back_project,
  transform,
  downsample,
  floor,
  cluster,
  map_update,
};

inline constexpr std::size_t kStageCount = 6;

inline constexpr std::array<const char*, kStageCount> kStageNames = {
    "back_project", "transform", "downsample", "floor", "cluster", "map_update"};

struct FrameReport {
  std::uint64_t frame_id = 0;
  std::size_t obstacles_total = 0;
  std::size_t detections = 0;
  bool floor_found = false;
  std::array<double, kStageCount> stage_ms{};
  double processing_ms = 0.0;
  std::vector<std::string> warnings;
};

/// The labeled cloud of the most recent frame, for scene dumps.
struct SceneDump {
  PointCloud floor;
  PointCloud rest;
  ClusterLabeling labeling;  // over `rest`
};

/// One session's frame-to-map processing chain. Not thread-safe; the owner
/// serializes calls to process().
class Pipeline {
 public:
  Pipeline(CameraIntrinsics intrinsics, PipelineConfig config)
      : intrinsics_(intrinsics), config_(std::move(config)), map_(config_.merge) {
    intrinsics_.validate();
    config_.validate();
  }

  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  const PipelineConfig& config() const { return config_; }
  const ObstacleMap& map() const { return map_; }
  const SceneDump& last_scene() const { return last_scene_; }
  std::uint64_t frames_processed() const { return next_frame_id_; }

  std::vector<FlatObstacle> flat_obstacles() const { return map_.project_2d(config_.slab); }

  FrameReport process(const DepthFrame& frame, const HeadPose& pose) {
    if (!(frame.intrinsics == intrinsics_)) {
      throw std::invalid_argument("Pipeline: frame intrinsics differ from the session's");
    }
    using Clock = std::chrono::steady_clock;
    FrameReport report;
    report.frame_id = next_frame_id_;

    const auto start = Clock::now();
    auto mark = start;
    auto lap = [&](Stage s) {
      const auto now = Clock::now();
      report.stage_ms[static_cast<std::size_t>(s)] =
          std::chrono::duration<double, std::milli>(now - mark).count();
      mark = now;
    };

    const PointCloud camera = back_project(frame, config_.depth_range);
    lap(Stage::back_project);
    const PointCloud registered = transform_to_grf(camera, pose);
    lap(Stage::transform);
    const PointCloud sparse = voxel_downsample(registered, config_.voxel_size);
    lap(Stage::downsample);

    std::optional<PlaneModel> plane = locked_floor_;
    if (!plane) {
      RansacParams ransac = config_.ransac;
      ransac.seed = config_.ransac.seed + report.frame_id;
      plane = fit_floor(sparse, ransac);
      if (plane && config_.lock_floor) locked_floor_ = plane;
    }
    SceneDump scene;
    if (plane) {
      auto split = split_floor(sparse, *plane, config_.ransac.inlier_threshold);
      scene.floor = std::move(split.floor);
      scene.rest = std::move(split.rest);
      report.floor_found = true;
    } else {
      // No floor: keep every point so that obstacles are over-reported.
      scene.floor.frame = FrameTag::grf;
      scene.rest = sparse;
      report.warnings.emplace_back("no_floor");
    }
    lap(Stage::floor);

    scene.labeling = dbscan(scene.rest, config_.dbscan);
    const std::vector<Aabb> detections = cluster_boxes(scene.rest, scene.labeling);
    lap(Stage::cluster);

    map_.integrate(detections, frame.timestamp);
    map_.expire(frame.timestamp);
    lap(Stage::map_update);

    report.processing_ms = std::chrono::duration<double, std::milli>(mark - start).count();
    report.detections = detections.size();
    report.obstacles_total = map_.size();
    last_scene_ = std::move(scene);
    ++next_frame_id_;
    return report;
  }

 private:
  CameraIntrinsics intrinsics_;
  PipelineConfig config_;
  ObstacleMap map_;
  std::optional<PlaneModel> locked_floor_;
  SceneDump last_scene_;
  std::uint64_t next_frame_id_ = 0;
};

}  // namespace navi
