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

#include "roadcal/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roadcal/errors.hpp"

namespace roadcal
{

std::string_view to_string(RejectionReason reason)
{
  switch (reason) {
    case RejectionReason::kTooFewPairs:
      return "TooFewPairs";
    case RejectionReason::kTrackTooShort2D:
      return "TrackTooShort2D";
    case RejectionReason::kTrackTooShort3D:
      return "TrackTooShort3D";
    case RejectionReason::kReprojectionTooHigh:
      return "ReprojectionTooHigh";
    case RejectionReason::kCameraTooFar:
      return "CameraTooFar";
    case RejectionReason::kCameraBelowGround:
      return "CameraBelowGround";
    case RejectionReason::kNoConsensus:
      return "NoConsensus";
  }
  return "Unknown";
}

void PrefilterParams::validate() const
{
  if (min_pairs < 4 || !(min_extent_2d_px > 0.0) || !(min_extent_3d_m > 0.0) ||
      !(max_median_reproj_px > 0.0) || !(d_thr > 0.0) || !(sync_tolerance > 0.0)) {
    throw Error(ErrorCode::kConfig, "invalid prefilter parameters");
  }
}

std::vector<WorldPoint> Hypothesis::positions() const
{
  std::vector<WorldPoint> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(position(i));
  }
  return out;
}

std::vector<Correspondence> Hypothesis::correspondences() const
{
  std::vector<Correspondence> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({position(i), PixelPoint(pairs[i].box.u, pairs[i].box.v), pairs[i].pose.timestamp});
  }
  return out;
}

LocalizationSample interpolate(const LocalizationSample & a, const LocalizationSample & b, double t)
{
  const double s = (t - a.timestamp) / (b.timestamp - a.timestamp);
  auto lerp_angle = [s](double x, double y) { return wrap_angle(x + s * wrap_angle(y - x)); };
  LocalizationSample out;
  out.timestamp = t;
  out.position = a.position + s * (b.position - a.position);
  out.roll = lerp_angle(a.roll, b.roll);
  out.pitch = lerp_angle(a.pitch, b.pitch);
  out.yaw = lerp_angle(a.yaw, b.yaw);
  return out;
}

std::vector<SyncedPair> synchronize(
  const ObjectTrack & track, std::span<const LocalizationSample> log, double tolerance)
{
  std::vector<SyncedPair> out;
  for (const auto & det : track.detections) {
    const double t = det.timestamp;
    if (log.empty() || t < log.front().timestamp || t > log.back().timestamp) {
      continue;
    }
    auto hi = std::lower_bound(
      log.begin(), log.end(), t, [](const LocalizationSample & s, double v) { return s.timestamp < v; });
    if (hi->timestamp == t) {
      out.push_back({*hi, det.box});
      continue;
    }
    const auto lo = std::prev(hi);
    if (t - lo->timestamp > tolerance && hi->timestamp - t > tolerance) {
      continue;
    }
    out.push_back({interpolate(*lo, *hi, t), det.box});
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoOverlap, "track does not overlap the localization log");
  }
  return out;
}

double extent_2d(std::span<const SyncedPair> pairs)
{
  if (pairs.empty()) {
    return 0.0;
  }
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto & p : pairs) {
    const Vec2 c(p.box.u, p.box.v);
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  return (hi - lo).norm();
}

double extent_3d(std::span<const WorldPoint> points)
{
  if (points.empty()) {
    return 0.0;
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto & p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

double distance_to_polyline(const WorldPoint & p, std::span<const WorldPoint> path)
{
  if (path.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  double best = (p - path.front()).norm();
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec3 a = path[i - 1];
    const Vec3 ab = path[i] - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + s * ab)).norm());
  }
  return best;
}

namespace
{

// Height is judged against the closest track point; no plane exists yet.
bool camera_above_path(const WorldPoint & center, std::span<const WorldPoint> path)
{
  const auto nearest = std::min_element(path.begin(), path.end(), [&](const auto & a, const auto & b) {
    return (a - center).squaredNorm() < (b - center).squaredNorm();
  });
  return nearest != path.end() && center.z() > nearest->z();
}

}  // namespace

std::optional<RejectionReason> prefilter_camera_pose(
  const ExtrinsicCalibration & calib, std::span<const WorldPoint> path, const PrefilterParams & pf)
{
  const WorldPoint center = camera_center(calib);
  if (distance_to_polyline(center, path) > pf.d_thr) {
    return RejectionReason::kCameraTooFar;
  }
  if (!camera_above_path(center, path)) {
    return RejectionReason::kCameraBelowGround;
  }
  return std::nullopt;
}

HypothesisOutcome build_hypothesis(
  const ObjectTrack & track, std::span<const LocalizationSample> log, const Intrinsics & intr,
  const Vec3 & anchor, const RansacParams & ransac, const PrefilterParams & pf)
{
  HypothesisOutcome outcome;
  Hypothesis & h = outcome.hypothesis;
  h.track_id = track.id;
  h.anchor = anchor;
  try {
    h.pairs = synchronize(track, log, pf.sync_tolerance);
  } catch (const Error & e) {
    if (e.code() != ErrorCode::kNoOverlap) {
      throw;
    }
    outcome.rejection = RejectionReason::kTooFewPairs;
    return outcome;
  }

  if (static_cast<int>(h.pairs.size()) < pf.min_pairs) {
    outcome.rejection = RejectionReason::kTooFewPairs;
    return outcome;
  }
  if (extent_2d(h.pairs) < pf.min_extent_2d_px) {
    outcome.rejection = RejectionReason::kTrackTooShort2D;
    return outcome;
  }
  const auto path = h.positions();
  if (extent_3d(path) < pf.min_extent_3d_m) {
    outcome.rejection = RejectionReason::kTrackTooShort3D;
    return outcome;
  }

  const auto corrs = h.correspondences();
  try {
    // Coplanar road positions admit a mirrored pose below the road surface.
    const auto above_ground = [&](const ExtrinsicCalibration & c) {
      return camera_above_path(camera_center(c), path);
    };
    const RansacResult fit = ransac_pnp(corrs, intr, ransac, above_ground);
    ExtrinsicCalibration calib = fit.calib;
    calib.anchor = anchor;
    h.calib = calib;
    h.median_reproj_px = fit.median_error_px;
    h.inlier_mask = fit.inliers;
  } catch (const Error & e) {
    if (e.code() == ErrorCode::kNoConsensus || e.code() == ErrorCode::kDegenerate) {
      outcome.rejection = RejectionReason::kNoConsensus;
      return outcome;
    }
    throw;
  }

  if (!(h.median_reproj_px <= pf.max_median_reproj_px)) {
    outcome.rejection = RejectionReason::kReprojectionTooHigh;
    return outcome;
  }
  outcome.rejection = prefilter_camera_pose(*h.calib, path, pf);
  return outcome;
}

}  // namespace roadcal
