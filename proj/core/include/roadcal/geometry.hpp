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

#ifndef ROADCAL__GEOMETRY_HPP_
#define ROADCAL__GEOMETRY_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace roadcal
{

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Point in the anchored world frame (ENU-like, +z up), meters.
using WorldPoint = Vec3;
/// Continuous image coordinate (u right, v down), pixels.
using PixelPoint = Vec2;

/// Minimum camera-frame depth treated as "in front of the camera".
inline constexpr double kMinDepth = 1e-9;

struct Intrinsics
{
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws Error(kInput) when the invariants do not hold.
  void validate() const;
  Mat3 matrix() const;
};

/// World-to-camera rigid transform. Camera frame is z-forward, x right,
/// y down. `translation` lives in the anchored frame; `anchor` is the UTM
/// offset that was subtracted from every world point.
struct ExtrinsicCalibration
{
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 anchor = Vec3::Zero();

  static ExtrinsicCalibration from_center(
    const Mat3 & rotation, const WorldPoint & center, const Vec3 & anchor = Vec3::Zero());

  Vec3 to_camera(const WorldPoint & p) const { return rotation * p + translation; }

  /// Orthonormality and handedness check with tolerance `tol`.
  bool is_valid(double tol = 1e-9) const;
};

struct GroundPlane
{
  WorldPoint point = WorldPoint::Zero();
  Vec3 normal = Vec3::UnitZ();

  double signed_distance(const WorldPoint & p) const { return normal.dot(p - point); }
};

PixelPoint project(const Intrinsics & intr, const ExtrinsicCalibration & extr, const WorldPoint & p);

/// Non-throwing projection; empty when the point is not in front of the camera.
std::optional<PixelPoint> try_project(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const WorldPoint & p);

WorldPoint camera_center(const ExtrinsicCalibration & extr);

/// Unit viewing-ray direction of a pixel, expressed in the world frame.
Vec3 viewing_ray(const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px);

WorldPoint backproject_to_plane(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px,
  const GroundPlane & plane);

std::optional<WorldPoint> try_backproject_to_plane(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px,
  const GroundPlane & plane);

bool in_image(const Intrinsics & intr, const PixelPoint & px);
bool in_frustum(const Intrinsics & intr, const ExtrinsicCalibration & extr, const WorldPoint & p);

struct MeanAnchor
{
};

struct FixedAnchor
{
  Vec3 offset = Vec3::Zero();
};

using AnchorMode = std::variant<MeanAnchor, FixedAnchor>;

struct AnchoredPoints
{
  std::vector<WorldPoint> points;
  Vec3 anchor = Vec3::Zero();
};

AnchoredPoints apply_anchor(std::span<const Vec3> raw, const AnchorMode & mode);

/// Moves a calibration onto a different anchor without changing the
/// physical transform it describes.
ExtrinsicCalibration reanchor(const ExtrinsicCalibration & extr, const Vec3 & new_anchor);

/// Body-to-world rotation from roll/pitch/yaw, intrinsic Z-Y'-X'' order.
Mat3 rotation_from_euler(double roll, double pitch, double yaw);

/// Closest rotation in Frobenius norm (polar decomposition via SVD).
Mat3 nearest_rotation(const Mat3 & m);

/// Rotation vector exponential map.
Mat3 rotation_exp(const Vec3 & omega);

/// Angle of R_aᵀ R_b in radians.
double rotation_angle(const Mat3 & a, const Mat3 & b);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace roadcal

#endif  // ROADCAL__GEOMETRY_HPP_
