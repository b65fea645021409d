// Copyright 2026 The roadcal Authors
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

#ifndef ROADCAL__SYNTHGEN_HPP_
#define ROADCAL__SYNTHGEN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "roadcal/geometry.hpp"
#include "roadcal/hypothesis.hpp"
#include "roadcal/refinement.hpp"
#include "roadcal/tracking.hpp"

namespace roadcal
{

struct NoiseConfig
{
  double sigma_pos = 0.0;  // meters, independent on x and y
  double sigma_box = 0.0;  // pixels, on u, v, w, h
  double detection_dropout = 0.0;

  void validate() const;
};

/// Polyline route on the ground (scene-local x/y, meters) driven at
/// constant speed. Closed routes repeat; open ones are driven once.
struct TrajectorySpec
{
  std::vector<Vec2> waypoints;
  double speed = 8.0;
  double start_time = 0.0;
  // Arc length already covered at start_time.
  double start_offset = 0.0;
  bool closed = false;
  VehicleDims dims;
};

struct ScenarioConfig
{
  Intrinsics intrinsics;
  // Camera pose in the scene-local frame.
  Vec3 camera_position = Vec3::Zero();
  Vec3 camera_look_at = Vec3::UnitX();
  // UTM coordinates of the scene-local origin.
  Vec3 utm_origin = Vec3::Zero();
  // Ground height z = slope.x * x + slope.y * y.
  Vec2 ground_slope = Vec2::Zero();

  TrajectorySpec target;
  int traversal_count = 2;
  std::vector<TrajectorySpec> distractors;

  double frame_rate = 10.0;
  double localization_rate = 50.0;
  // 0 derives the duration from traversal_count laps of the target loop.
  double duration = 0.0;
  double min_box_px = 8.0;
  // Detector model: a vehicle is reported only when at least this share of
  // its projected hull lies inside the image.
  double min_visible_fraction = 0.5;
  NoiseConfig noise;
  std::uint64_t rng_seed = 1;

  void validate() const;
  ExtrinsicCalibration camera() const;  // anchored at utm_origin
  double recording_duration() const;
};

struct ScenarioTruth
{
  ExtrinsicCalibration calib;  // anchor = utm_origin
  GroundPlane plane;           // scene-local frame
  Vec3 utm_origin = Vec3::Zero();
  int target_id = 0;
  // Time spans in which the target produced detections.
  std::vector<std::pair<double, double>> traversals;
};

struct Scenario
{
  std::vector<DetectionFrame> frames;  // ids hold the true vehicle id (target = 0)
  std::vector<LocalizationSample> log;
  ScenarioTruth truth;
};

/// Projects every vehicle's 3D box at each frame into an image box and
/// samples the target's localization. Deterministic for a given config.
Scenario generate(const ScenarioConfig & config);

/// Exact vehicle pose of a trajectory at time t (empty before start or
/// after the end of an open route).
std::optional<LocalizationSample> trajectory_pose(
  const TrajectorySpec & spec, const Vec2 & ground_slope, double t);

/// Image box of a vehicle: the axis-aligned hull of its eight projected
/// corners, clipped to the image.
std::optional<BoundingBox> vehicle_box(
  const LocalizationSample & local_pose, const VehicleDims & dims, const Intrinsics & intr,
  const ExtrinsicCalibration & camera, double min_visible_fraction = 0.0);

enum class OcclusionPolicy { kDrop, kShrink };

struct ObstacleRegion
{
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
  OcclusionPolicy policy = OcclusionPolicy::kDrop;
};

/// Removes (or trims horizontally) boxes whose center lies in a region.
std::vector<DetectionFrame> occlude(
  std::vector<DetectionFrame> frames, std::span<const ObstacleRegion> regions);

/// Four-way intersection with a roadside camera on the south-west corner.
/// The target loops through the camera view `traversals` times; distractor
/// vehicles share the road layout.
ScenarioConfig intersection_scenario(
  int traversals = 2, int distractor_count = 5, double sigma_pos = 0.0, std::uint64_t seed = 1);

/// Re-times distractors pseudo-randomly from `seed` (start jitter and speed).
void jitter_distractors(ScenarioConfig & config, std::uint64_t seed);

}  // namespace roadcal

#endif  // ROADCAL__SYNTHGEN_HPP_
