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

#include "roadcal/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "roadcal/errors.hpp"

namespace roadcal
{

void Intrinsics::validate() const
{
  const bool ok = fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx > 0.0 &&
                  cx < static_cast<double>(width) && cy > 0.0 && cy < static_cast<double>(height);
  if (!ok) {
    std::ostringstream msg;
    msg << "invalid intrinsics (fx=" << fx << ", fy=" << fy << ", cx=" << cx << ", cy=" << cy
        << ", size=" << width << "x" << height << ")";
    throw Error(ErrorCode::kInput, msg.str());
  }
}

Mat3 Intrinsics::matrix() const
{
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

ExtrinsicCalibration ExtrinsicCalibration::from_center(
  const Mat3 & rotation, const WorldPoint & center, const Vec3 & anchor)
{
  ExtrinsicCalibration c;
  c.rotation = rotation;
  c.translation = -rotation * center;
  c.anchor = anchor;
  return c;
}

bool ExtrinsicCalibration::is_valid(double tol) const
{
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).norm();
  return ortho < tol && std::abs(rotation.determinant() - 1.0) < tol && translation.allFinite() &&
         anchor.allFinite();
}

std::optional<PixelPoint> try_project(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const WorldPoint & p)
{
  const Vec3 pc = extr.to_camera(p);
  if (!(pc.z() > kMinDepth)) {
    return std::nullopt;
  }
  return PixelPoint(intr.fx * pc.x() / pc.z() + intr.cx, intr.fy * pc.y() / pc.z() + intr.cy);
}

PixelPoint project(const Intrinsics & intr, const ExtrinsicCalibration & extr, const WorldPoint & p)
{
  auto px = try_project(intr, extr, p);
  if (!px) {
    throw Error(ErrorCode::kBehindCamera, "point is not in front of the camera");
  }
  return *px;
}

WorldPoint camera_center(const ExtrinsicCalibration & extr)
{
  return -extr.rotation.transpose() * extr.translation;
}

Vec3 viewing_ray(const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px)
{
  const Vec3 dir_cam((px.x() - intr.cx) / intr.fx, (px.y() - intr.cy) / intr.fy, 1.0);
  return (extr.rotation.transpose() * dir_cam).normalized();
}

namespace
{

enum class RayHit { kOk, kParallel, kBehind };

RayHit intersect(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px,
  const GroundPlane & plane, WorldPoint & out)
{
  const WorldPoint origin = camera_center(extr);
  const Vec3 dir = viewing_ray(intr, extr, px);
  const double denom = plane.normal.dot(dir);
  if (std::abs(denom) <= 1e-9) {
    return RayHit::kParallel;
  }
  const double s = plane.normal.dot(plane.point - origin) / denom;
  if (!(s > 0.0)) {
    return RayHit::kBehind;
  }
  out = origin + s * dir;
  return RayHit::kOk;
}

}  // namespace

std::optional<WorldPoint> try_backproject_to_plane(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px,
  const GroundPlane & plane)
{
  WorldPoint out;
  if (intersect(intr, extr, px, plane, out) != RayHit::kOk) {
    return std::nullopt;
  }
  return out;
}

WorldPoint backproject_to_plane(
  const Intrinsics & intr, const ExtrinsicCalibration & extr, const PixelPoint & px,
  const GroundPlane & plane)
{
  WorldPoint out;
  switch (intersect(intr, extr, px, plane, out)) {
    case RayHit::kParallel:
      throw Error(ErrorCode::kNoIntersection, "viewing ray is parallel to the plane");
    case RayHit::kBehind:
      throw Error(ErrorCode::kBehindCamera, "plane intersection lies behind the camera");
    case RayHit::kOk:
      break;
  }
  return out;
}

bool in_image(const Intrinsics & intr, const PixelPoint & px)
{
  return px.x() >= 0.0 && px.x() <= intr.width && px.y() >= 0.0 && px.y() <= intr.height;
}

bool in_frustum(const Intrinsics & intr, const ExtrinsicCalibration & extr, const WorldPoint & p)
{
  const auto px = try_project(intr, extr, p);
  return px && in_image(intr, *px);
}

AnchoredPoints apply_anchor(std::span<const Vec3> raw, const AnchorMode & mode)
{
  if (raw.empty()) {
    throw Error(ErrorCode::kInput, "cannot anchor an empty point list");
  }
  AnchoredPoints out;
  if (const auto * fixed = std::get_if<FixedAnchor>(&mode)) {
    out.anchor = fixed->offset;
  } else {
    Vec3 sum = Vec3::Zero();
    for (const auto & p : raw) {
      sum += p;
    }
    out.anchor = sum / static_cast<double>(raw.size());
  }
  out.points.reserve(raw.size());
  for (const auto & p : raw) {
    out.points.push_back(p - out.anchor);
  }
  return out;
}

ExtrinsicCalibration reanchor(const ExtrinsicCalibration & extr, const Vec3 & new_anchor)
{
  ExtrinsicCalibration out = extr;
  out.translation = extr.translation + extr.rotation * (new_anchor - extr.anchor);
  out.anchor = new_anchor;
  return out;
}

Mat3 rotation_from_euler(double roll, double pitch, double yaw)
{
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
    .toRotationMatrix();
}

Mat3 nearest_rotation(const Mat3 & m)
{
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 rotation_exp(const Vec3 & omega)
{
  const double angle = omega.norm();
  if (angle < 1e-15) {
    Mat3 skew;
    skew << 0.0, -omega.z(), omega.y(), omega.z(), 0.0, -omega.x(), -omega.y(), omega.x(), 0.0;
    return Mat3::Identity() + skew;
  }
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

double rotation_angle(const Mat3 & a, const Mat3 & b)
{
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; recover the small-angle case from the
  // skew part.
  const Mat3 r = a.transpose() * b;
  const double s = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  return std::atan2(s, c);
}

double wrap_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  } else if (a > std::numbers::pi) {
    a -= two_pi;
  }
  return a;
}

}  // namespace roadcal
