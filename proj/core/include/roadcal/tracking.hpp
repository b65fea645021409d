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

#ifndef ROADCAL__TRACKING_HPP_
#define ROADCAL__TRACKING_HPP_

#include <cstddef>
#include <vector>

namespace roadcal
{

/// Axis-aligned image box given by its center and size, pixels.
struct BoundingBox
{
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return u - 0.5 * w; }
  double right() const { return u + 0.5 * w; }
  double top() const { return v - 0.5 * h; }
  double bottom() const { return v + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  bool operator==(const BoundingBox &) const = default;
};

/// One input frame. `ids` is either empty or holds one detector-provided
/// identifier per box.
struct DetectionFrame
{
  double timestamp = 0.0;
  std::vector<BoundingBox> boxes;
  std::vector<int> ids;

  bool operator==(const DetectionFrame &) const = default;
};

struct Detection
{
  double timestamp = 0.0;
  BoundingBox box;
  bool extrapolated = false;
  // Position of the source box in the input, for traceability.
  std::size_t frame_index = 0;
  std::size_t box_index = 0;
};

struct ObjectTrack
{
  int id = 0;
  std::vector<Detection> detections;
};

inline constexpr double kForbiddenCost = 2.0;

struct TrackerParams
{
  int max_extrapolation_frames = 10;
  int min_track_detections = 4;
  // Nominal frame spacing; 0 infers it as the smallest positive gap between
  // consecutive input frames.
  double frame_interval_s = 0.0;
  // When set, a coasting track whose predicted center leaves the image is
  // retired at once. Zero disables the check.
  int image_width = 0;
  int image_height = 0;
};

double iou(const BoundingBox & a, const BoundingBox & b);

/// Distance-IoU: IoU minus squared center distance over the squared
/// diagonal of the smallest enclosing box.
double diou(const BoundingBox & a, const BoundingBox & b);

/// 1 - DIoU for overlapping boxes, kForbiddenCost otherwise.
double association_cost(const BoundingBox & a, const BoundingBox & b);

/// Frame-to-frame association with linear extrapolation across misses.
/// Returned tracks contain only real detections, ordered by track id.
std::vector<ObjectTrack> run_tracker(
  const std::vector<DetectionFrame> & frames, const TrackerParams & params);

/// Builds tracks directly from detector ids, bypassing association.
std::vector<ObjectTrack> tracks_from_ids(
  const std::vector<DetectionFrame> & frames, int min_track_detections);

}  // namespace roadcal

#endif  // ROADCAL__TRACKING_HPP_
