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

#ifndef ROADCAL__REFINEMENT_HPP_
#define ROADCAL__REFINEMENT_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadcal/geometry.hpp"
#include "roadcal/grouping.hpp"
#include "roadcal/hypothesis.hpp"

namespace roadcal
{

/// Vehicle box size. The localization reference point is the geometric
/// center of the footprint at ground level.
struct VehicleDims
{
  double length = 4.6;
  double width = 1.9;
  double height = 1.5;

  void validate() const;
};

/// Footprint corner paired with the point on the box's bottom edge that
/// should image it.
struct RefinedPair
{
  WorldPoint world_corner = WorldPoint::Zero();
  PixelPoint pixel_anchor = PixelPoint::Zero();
  // Bottom edge of the box, left to right; both share the same v.
  PixelPoint edge_left = PixelPoint::Zero();
  PixelPoint edge_right = PixelPoint::Zero();
  int corner_index = 0;  // FL, FR, RR, RL
  std::size_t source_index = 0;  // index of the synced pair it came from
};

struct RefinementSettings
{
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-10;
  // Re-derive each pixel anchor from the current estimate on every
  // evaluation. When false, anchors are fixed within a correspondence round.
  // Re-clamping leaves the camera free to slide along its own x axis, since
  // that motion changes no bottom-edge row.
  bool reclamp_each_iteration = false;
  // Correspondence selection and registration are alternated this many times.
  int correspondence_rounds = 3;
  // Boxes touching the image border do not show the full vehicle.
  bool skip_truncated_boxes = true;
  double truncation_margin_px = 1.0;

  void validate() const;
};

struct RegistrationResult
{
  ExtrinsicCalibration calib;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool non_improvement = false;
};

struct PairEvaluation
{
  double delta_p = 0.0;
  double distance = 0.0;  // corner to camera center
};

struct Metrics
{
  double e_mean = 0.0;  // percent
  double e_max = 0.0;   // percent
  double delta_p_mean = 0.0;
  double delta_p_max = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::vector<PairEvaluation> samples;
};

struct CandidateScore
{
  int group_index = 0;
  int track_id = -1;  // -1 marks the merged calibration
  ExtrinsicCalibration calib;
  double delta_p_mean = 0.0;
};

struct CalibrationResult
{
  ExtrinsicCalibration calib;
  Metrics metrics;
  int group_index = 0;
  std::vector<int> member_track_ids;
  int selected_track_id = -1;  // -1 when the merged calibration won
  std::size_t pair_count = 0;
  bool non_improvement = false;
  std::vector<CandidateScore> candidates;

  double delta_p_mean() const { return metrics.delta_p_mean; }
  double delta_p_max() const { return metrics.delta_p_max; }
};

GroundPlane fit_ground_plane(std::span<const WorldPoint> points);
GroundPlane fit_ground_plane(std::span<const LocalizationSample> samples, const Vec3 & anchor);

/// Ground-level corners in the order front-left, front-right, rear-right,
/// rear-left.
std::array<WorldPoint, 4> vehicle_footprint(
  const LocalizationSample & pose, const VehicleDims & dims, const Vec3 & anchor);

std::vector<RefinedPair> refine_correspondences(
  std::span<const SyncedPair> pairs, const Vec3 & anchor, const ExtrinsicCalibration & calib,
  const VehicleDims & dims, const GroundPlane & plane, const Intrinsics & intr,
  const RefinementSettings & settings = {});

std::vector<RefinedPair> refine_correspondences(
  const Hypothesis & h, const ExtrinsicCalibration & calib, const VehicleDims & dims,
  const GroundPlane & plane, const Intrinsics & intr, const RefinementSettings & settings = {});

/// Closest point of the bottom edge to the projection of the corner.
std::optional<PixelPoint> clamp_to_edge(
  const ExtrinsicCalibration & calib, const Intrinsics & intr, const RefinedPair & pair);

/// Ground distance between the back-projected pixel anchor and the corner.
/// Empty when the anchor ray misses the plane.
std::optional<double> delta_p(
  const ExtrinsicCalibration & calib, const RefinedPair & pair, const GroundPlane & plane,
  const Intrinsics & intr);

/// Minimizes the sum of squared delta_p over SE(3) starting at `init`.
RegistrationResult register_calibration(
  std::span<const RefinedPair> pairs, const ExtrinsicCalibration & init, const Intrinsics & intr,
  const GroundPlane & plane, const RefinementSettings & settings = {});

/// delta_p statistics; relative errors in percent of corner range.
Metrics evaluate(
  const ExtrinsicCalibration & calib, std::span<const RefinedPair> pairs, const GroundPlane & plane,
  const Intrinsics & intr);

/// Refinement of one hypothesis: alternates correspondence selection and
/// registration from its own calibration.
RegistrationResult refine_hypothesis(
  const Hypothesis & h, const ExtrinsicCalibration & init, const VehicleDims & dims,
  const GroundPlane & plane, const Intrinsics & intr, const RefinementSettings & settings);

/// Concatenates the pairs of every member.
Hypothesis merge_members(const HypothesisGroup & group);

/// Refines every member and the merged ensemble, scores all of them on the
/// merged pairs and keeps the best. The ensemble starts from the best-scoring
/// member and wins ties.
CalibrationResult merge_and_select(
  std::span<const HypothesisGroup> groups, const VehicleDims & dims, const GroundPlane & plane,
  const Intrinsics & intr, const RefinementSettings & settings = {});

}  // namespace roadcal

#endif  // ROADCAL__REFINEMENT_HPP_
