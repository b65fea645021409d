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


#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "../support/oracles.hpp"
#include "roadcal/errors.hpp"
#include "roadcal/geometry.hpp"

namespace roadcal
{
namespace
{

Intrinsics simple_intrinsics()
{
  Intrinsics intr;
  intr.fx = 1000.0;
  intr.fy = 1000.0;
  intr.cx = 960.0;
  intr.cy = 600.0;
  intr.width = 1920;
  intr.height = 1200;
  return intr;
}

ExtrinsicCalibration random_extrinsics(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  ExtrinsicCalibration e;
  e.rotation = oracle::random_rotation(rng);
  e.translation = Vec3(u(rng), u(rng), u(rng));
  return e;
}

ErrorCode code_of(const std::function<void()> & f)
{
  try {
    f();
  } catch (const Error & e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kGeneration;
}

TEST(Intrinsics, ValidateRejectsBadValues)
{
  Intrinsics intr = simple_intrinsics();
  EXPECT_NO_THROW(intr.validate());
  intr.fx = 0.0;
  EXPECT_EQ(code_of([&] { intr.validate(); }), ErrorCode::kInput);
  intr = simple_intrinsics();
  intr.cx = 1920.0;
  EXPECT_EQ(code_of([&] { intr.validate(); }), ErrorCode::kInput);
}

TEST(Project, OpticalAxisHitsPrincipalPoint)
{
  const auto px = project(simple_intrinsics(), ExtrinsicCalibration{}, Vec3(0, 0, 1));
  EXPECT_DOUBLE_EQ(px.x(), 960.0);
  EXPECT_DOUBLE_EQ(px.y(), 600.0);
}

TEST(Project, LateralOffsetScalesWithFocalLength)
{
  const auto px = project(simple_intrinsics(), ExtrinsicCalibration{}, Vec3(0.1, 0, 1));
  EXPECT_NEAR(px.x(), 1060.0, 1e-12);
  EXPECT_NEAR(px.y(), 600.0, 1e-12);
}

TEST(Project, BehindCameraIsAnError)
{
  EXPECT_EQ(
    code_of([] { project(simple_intrinsics(), ExtrinsicCalibration{}, Vec3(0, 0, -1)); }),
    ErrorCode::kBehindCamera);
  EXPECT_FALSE(try_project(simple_intrinsics(), ExtrinsicCalibration{}, Vec3(0, 0, 0)).has_value());
}

TEST(Project, MatchesHomogeneousProduct)
{
  std::mt19937_64 rng(11);
  const Intrinsics intr = simple_intrinsics();
  int checked = 0;
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  while (checked < 500) {
    const auto e = random_extrinsics(rng);
    const Vec3 p(u(rng), u(rng), u(rng));
    if (e.to_camera(p).z() <= 1e-3) {
      continue;
    }
    const Vec2 got = project(intr, e, p);
    const Vec2 want = oracle::homogeneous_project(intr, e, p);
    ASSERT_NEAR(got.x(), want.x(), 1e-9 * std::max(1.0, std::abs(want.x())));
    ASSERT_NEAR(got.y(), want.y(), 1e-9 * std::max(1.0, std::abs(want.y())));
    ++checked;
  }
}

TEST(CameraCenter, FormulaInstances)
{
  ExtrinsicCalibration e;
  EXPECT_TRUE(camera_center(e).isZero());
  e.translation = Vec3(1, 2, 3);
  EXPECT_TRUE(camera_center(e).isApprox(Vec3(-1, -2, -3)));
}

TEST(CameraCenter, MapsToCameraOrigin)
{
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto e = random_extrinsics(rng);
    EXPECT_LT((e.rotation * camera_center(e) + e.translation).norm(), 1e-9);
  }
}

TEST(Extrinsics, FromCenterRoundTrip)
{
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = oracle::random_rotation(rng);
    const Vec3 c(1.5 * i, -2.0, 7.0);
    const auto e = ExtrinsicCalibration::from_center(r, c);
    EXPECT_TRUE(e.is_valid());
    EXPECT_LT((camera_center(e) - c).norm(), 1e-9);
  }
}

TEST(Extrinsics, ValidityRejectsReflection)
{
  ExtrinsicCalibration e;
  e.rotation(2, 2) = -1.0;
  EXPECT_FALSE(e.is_valid());
  e.rotation = 1.001 * Mat3::Identity();
  EXPECT_FALSE(e.is_valid());
}

TEST(Backproject, NadirRay)
{
  const Intrinsics intr = simple_intrinsics();
  // Looking straight down: camera z along world -z.
  Mat3 r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  const auto e = ExtrinsicCalibration::from_center(r, Vec3(0, 0, 10));
  const auto p = backproject_to_plane(intr, e, Vec2(intr.cx, intr.cy), GroundPlane{});
  EXPECT_LT(p.norm(), 1e-12);
}

TEST(Backproject, ParallelAndBehindRays)
{
  const Intrinsics intr = simple_intrinsics();
  // Horizontal optical axis along world +x, camera 5 m up.
  Mat3 r;
  r << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  const auto e = ExtrinsicCalibration::from_center(r, Vec3(0, 0, 5));
  EXPECT_EQ(
    code_of([&] { backproject_to_plane(intr, e, Vec2(intr.cx, intr.cy), GroundPlane{}); }),
    ErrorCode::kNoIntersection);
  // Upper image half looks at the sky; the plane is behind those rays.
  EXPECT_EQ(
    code_of([&] { backproject_to_plane(intr, e, Vec2(intr.cx, 100.0), GroundPlane{}); }),
    ErrorCode::kBehindCamera);
  EXPECT_FALSE(try_backproject_to_plane(intr, e, Vec2(intr.cx, 100.0), GroundPlane{}).has_value());
}

TEST(Backproject, MatchesParametricOracle)
{
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Intrinsics intr = simple_intrinsics();
  int checked = 0;
  while (checked < 300) {
    const auto e = random_extrinsics(rng);
    GroundPlane plane;
    plane.point = Vec3(u(rng), u(rng), u(rng)) * 10.0;
    plane.normal = Vec3(u(rng) - 0.5, u(rng) - 0.5, 1.0).normalized();
    const Vec2 px(u(rng) * intr.width, u(rng) * intr.height);
    const auto got = try_backproject_to_plane(intr, e, px, plane);
    if (!got) {
      continue;
    }
    const Vec3 dir = e.rotation.transpose() *
                     Vec3((px.x() - intr.cx) / intr.fx, (px.y() - intr.cy) / intr.fy, 1.0);
    const auto want = oracle::parametric_ray_plane(camera_center(e), dir, plane.point, plane.normal);
    ASSERT_TRUE(want.has_value());
    ASSERT_LT((*got - *want).norm(), 1e-9 * std::max(1.0, want->norm()));
    ++checked;
  }
}

TEST(Backproject, RoundTripThroughProjection)
{
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  const Intrinsics intr = simple_intrinsics();
  const auto e = ExtrinsicCalibration::from_center(
    rotation_from_euler(-1.9, 0.0, 0.6), Vec3(-10.0, -12.0, 8.0));
  GroundPlane plane;
  plane.normal = Vec3(0.02, -0.01, 1.0).normalized();
  int checked = 0;
  while (checked < 300) {
    Vec3 p(u(rng), u(rng), 0.0);
    p.z() = -(plane.normal.x() * p.x() + plane.normal.y() * p.y()) / plane.normal.z();
    if (!in_frustum(intr, e, p)) {
      continue;
    }
    const auto back = backproject_to_plane(intr, e, project(intr, e, p), plane);
    ASSERT_LT((back - p).norm(), 1e-6);
    ++checked;
  }
}

TEST(Frustum, AxisAndBehind)
{
  const Intrinsics intr = simple_intrinsics();
  EXPECT_TRUE(in_frustum(intr, ExtrinsicCalibration{}, Vec3(0, 0, 1)));
  EXPECT_FALSE(in_frustum(intr, ExtrinsicCalibration{}, Vec3(0, 0, -1)));
}

TEST(Frustum, BorderSweepAgreesWithBoundsCheck)
{
  const Intrinsics intr = simple_intrinsics();
  const ExtrinsicCalibration e;
  for (double x = -1.2; x <= 1.2; x += 0.0013) {
    for (double y : {-0.7, -0.6, 0.0, 0.6, 0.61}) {
      const Vec3 p(x, y, 1.0);
      const Vec2 px = oracle::homogeneous_project(intr, e, p);
      const bool want = px.x() >= 0.0 && px.x() <= intr.width && px.y() >= 0.0 && px.y() <= intr.height;
      ASSERT_EQ(in_frustum(intr, e, p), want) << x << " " << y;
    }
  }
}

TEST(Anchor, SinglePointMean)
{
  const std::vector<Vec3> raw{Vec3(5e5, 5.4e6, 300)};
  const auto a = apply_anchor(raw, MeanAnchor{});
  EXPECT_EQ(a.anchor, raw[0]);
  EXPECT_TRUE(a.points[0].isZero());
}

TEST(Anchor, SymmetricPointsSumToZero)
{
  const std::vector<Vec3> raw{Vec3(5e5 + 3, 5.4e6 - 2, 301), Vec3(5e5 - 3, 5.4e6 + 2, 299)};
  const auto a = apply_anchor(raw, MeanAnchor{});
  EXPECT_LT((a.points[0] + a.points[1]).norm(), 1e-9);
}

TEST(Anchor, FixedAnchorIsBitExact)
{
  // Exact whenever the anchor lies near the data, as UTM anchors do.
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 offset(572000.0, 9990000.0, 470.0);
  std::vector<Vec3> raw;
  for (int i = 0; i < 1000; ++i) {
    raw.push_back(offset + Vec3(2e5 * u(rng), 5e6 * u(rng), 200.0 * u(rng)));
  }
  const auto a = apply_anchor(raw, FixedAnchor{offset});
  EXPECT_EQ(a.anchor, offset);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ASSERT_EQ(a.points[i] + a.anchor, raw[i]);
  }
}

TEST(Anchor, EmptyInputIsAnError)
{
  EXPECT_EQ(code_of([] { apply_anchor({}, MeanAnchor{}); }), ErrorCode::kInput);
}

TEST(Anchor, ProjectionIsInvariantUnderReanchoring)
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  const Intrinsics intr = simple_intrinsics();
  const Vec3 anchor_a(572310.0, 5362840.0, 478.0);
  const Vec3 anchor_b(572300.0, 5362800.0, 480.0);
  const auto e_a = ExtrinsicCalibration::from_center(
    rotation_from_euler(-1.9, 0.0, 0.6), Vec3(-10.0, -12.0, 8.0), anchor_a);
  const auto e_b = reanchor(e_a, anchor_b);
  EXPECT_EQ(e_b.anchor, anchor_b);
  for (int i = 0; i < 200; ++i) {
    // Points chosen so that both anchored forms are exactly representable.
    const Vec3 utm = anchor_a + Vec3(std::round(u(rng) * 64) / 64, std::round(u(rng) * 64) / 64, 0.0);
    const Vec3 p_a = utm - anchor_a;
    const Vec3 p_b = utm - anchor_b;
    const auto px_a = try_project(intr, e_a, p_a);
    const auto px_b = try_project(intr, e_b, p_b);
    ASSERT_EQ(px_a.has_value(), px_b.has_value());
    if (px_a) {
      ASSERT_NEAR(px_a->x(), px_b->x(), 1e-6);
      ASSERT_NEAR(px_a->y(), px_b->y(), 1e-6);
    }
  }
}

TEST(Rotation, EulerConventionIsYawPitchRoll)
{
  const double roll = 0.1;
  const double pitch = -0.2;
  const double yaw = 2.5;
  const Mat3 want = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                     Eigen::AngleAxisd(roll, Vec3::UnitX()))
                      .toRotationMatrix();
  EXPECT_LT((rotation_from_euler(roll, pitch, yaw) - want).norm(), 1e-12);
}

TEST(Rotation, NearestRotationIsOrthonormal)
{
  std::mt19937_64 rng(18);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int i = 0; i < 100; ++i) {
    Mat3 m = oracle::random_rotation(rng);
    for (int k = 0; k < 9; ++k) {
      m(k / 3, k % 3) += n(rng);
    }
    const Mat3 r = nearest_rotation(m);
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
  }
}

TEST(Rotation, ExpAndAngle)
{
  const Vec3 omega(0.0, 0.0, 0.3);
  const Mat3 r = rotation_exp(omega);
  EXPECT_NEAR(rotation_angle(r, Mat3::Identity()), 0.3, 1e-12);
  EXPECT_LT((rotation_exp(Vec3::Zero()) - Mat3::Identity()).norm(), 1e-15);
}

TEST(Rotation, WrapAngle)
{
  EXPECT_NEAR(wrap_angle(3 * M_PI / 2), -M_PI / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(-3 * M_PI / 2), M_PI / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(0.25), 0.25, 1e-15);
}

}  // namespace
}  // namespace roadcal
