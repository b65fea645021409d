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

#ifndef ROADCAL__HYPOTHESIS_HPP_
#define ROADCAL__HYPOTHESIS_HPP_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "roadcal/geometry.hpp"
#include "roadcal/pnp.hpp"
#include "roadcal/tracking.hpp"

namespace roadcal
{

/// Timestamped vehicle pose. `position` is raw UTM (meters); angles are
/// radians, applied in Z-Y'-X'' order.
struct LocalizationSample
{
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Mat3 orientation() const { return rotation_from_euler(roll, pitch, yaw); }

  bool operator==(const LocalizationSample &) const = default;
};

struct SyncedPair
{
  LocalizationSample pose;
  BoundingBox box;
};

enum class RejectionReason {
  kTooFewPairs,
  kTrackTooShort2D,
  kTrackTooShort3D,
  kReprojectionTooHigh,
  kCameraTooFar,
  kCameraBelowGround,
  kNoConsensus,
};

inline constexpr int kRejectionReasonCount = 7;

std::string_view to_string(RejectionReason reason);

struct PrefilterParams
{
  int min_pairs = 4;
  double min_extent_2d_px = 50.0;
  double min_extent_3d_m = 5.0;
  double max_median_reproj_px = 20.0;
  double d_thr = 30.0;
  double sync_tolerance = 0.1;

  void validate() const;
};

struct Hypothesis
{
  int track_id = 0;
  std::vector<SyncedPair> pairs;
  Vec3 anchor = Vec3::Zero();
  std::optional<ExtrinsicCalibration> calib;
  double median_reproj_px = 0.0;
  std::vector<bool> inlier_mask;

  WorldPoint position(std::size_t i) const { return pairs[i].pose.position - anchor; }
  std::vector<WorldPoint> positions() const;
  std::vector<Correspondence> correspondences() const;
};

struct HypothesisOutcome
{
  Hypothesis hypothesis;
  std::optional<RejectionReason> rejection;

  bool accepted() const { return !rejection.has_value(); }
};

/// Pairs every detection with the localization pose interpolated at its
/// timestamp. Throws kNoOverlap when nothing survives.
std::vector<SyncedPair> synchronize(
  const ObjectTrack & track, std::span<const LocalizationSample> log, double tolerance);

/// Pose at time t by linear interpolation; angles take the shortest arc.
LocalizationSample interpolate(const LocalizationSample & a, const LocalizationSample & b, double t);

HypothesisOutcome build_hypothesis(
  const ObjectTrack & track, std::span<const LocalizationSample> log, const Intrinsics & intr,
  const Vec3 & anchor, const RansacParams & ransac, const PrefilterParams & pf);

/// Distance gate against the driven path and the below-ground check.
std::optional<RejectionReason> prefilter_camera_pose(
  const ExtrinsicCalibration & calib, std::span<const WorldPoint> path, const PrefilterParams & pf);

/// Min distance from p to the polyline through `path`.
double distance_to_polyline(const WorldPoint & p, std::span<const WorldPoint> path);

/// Diagonal of the axis-aligned bounding region of the points.
double extent_2d(std::span<const SyncedPair> pairs);
double extent_3d(std::span<const WorldPoint> points);

}  // namespace roadcal

#endif  // ROADCAL__HYPOTHESIS_HPP_
