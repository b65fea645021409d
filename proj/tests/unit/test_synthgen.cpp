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

#include "../support/oracles.hpp"
#include "roadcal/errors.hpp"
#include "roadcal/synthgen.hpp"

namespace roadcal
{
namespace
{

ScenarioConfig straight_drive()
{
  ScenarioConfig c;
  c.intrinsics = oracle::test_intrinsics();
  c.camera_position = Vec3(0.0, -25.0, 7.0);
  c.camera_look_at = Vec3(0.0, 0.0, 0.0);
  c.utm_origin = Vec3(500000.0, 5400000.0, 300.0);
  c.target.waypoints = {Vec2(-80.0, 0.0), Vec2(80.0, 0.0)};
  c.target.speed = 10.0;
  c.traversal_count = 1;
  return c;
}

std::array<Vec2, 2> hull_oracle(const Scenario & s, const ScenarioConfig & c, const LocalizationSample & pose)
{
  const Mat3 r = (Eigen::AngleAxisd(pose.yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pose.pitch, Vec3::UnitY()) *
                  Eigen::AngleAxisd(pose.roll, Vec3::UnitX()))
                   .toRotationMatrix();
  Vec2 lo = Vec2::Constant(1e300);
  Vec2 hi = -lo;
  const auto & d = c.target.dims;
  for (double x : {-0.5, 0.5}) {
    for (double y : {-0.5, 0.5}) {
      for (double z : {0.0, 1.0}) {
        const Vec3 p = pose.position + r * Vec3(x * d.length, y * d.width, z * d.height);
        const Vec2 px = oracle::homogeneous_project(c.intrinsics, s.truth.calib, p);
        lo = lo.cwiseMin(px);
        hi = hi.cwiseMax(px);
      }
    }
  }
  return {lo, hi};
}

TEST(Generate, BoxesMatchProjectedHull)
{
  const auto c = straight_drive();
  const auto s = generate(c);
  int checked = 0;
  for (const auto & f : s.frames) {
    for (std::size_t j = 0; j < f.boxes.size(); ++j) {
      ASSERT_EQ(f.ids[j], 0);
      const auto pose = trajectory_pose(c.target, c.ground_slope, f.timestamp);
      ASSERT_TRUE(pose);
      const auto [lo, hi] = hull_oracle(s, c, *pose);
      if (lo.x() < 0 || lo.y() < 0 || hi.x() > c.intrinsics.width || hi.y() > c.intrinsics.height) {
        continue;
      }
      const Vec2 center = 0.5 * (lo + hi);
      EXPECT_NEAR(f.boxes[j].u, center.x(), 1e-6);
      EXPECT_NEAR(f.boxes[j].v, center.y(), 1e-6);
      EXPECT_NEAR(f.boxes[j].w, hi.x() - lo.x(), 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Generate, TruthCameraMatchesConfiguration)
{
  const auto c = straight_drive();
  const auto s = generate(c);
  EXPECT_TRUE(s.truth.calib.is_valid());
  EXPECT_LT((camera_center(s.truth.calib) - c.camera_position).norm(), 1e-9);
  EXPECT_EQ(s.truth.calib.anchor, c.utm_origin);
  const auto look = project(c.intrinsics, s.truth.calib, c.camera_look_at);
  EXPECT_NEAR(look.x(), c.intrinsics.cx, 1e-6);
  EXPECT_NEAR(look.y(), c.intrinsics.cy, 1e-6);
}

TEST(Generate, PositionNoiseStatistics)
{
  auto c = intersection_scenario(4, 0, 0.075, 5);
  const auto s = generate(c);
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t n = 0;
  for (const auto & sample : s.log) {
    const auto truth = trajectory_pose(c.target, c.ground_slope, sample.timestamp);
    ASSERT_TRUE(truth);
    const double dx = sample.position.x() - c.utm_origin.x() - truth->position.x();
    sum += dx;
    sum2 += dx * dx;
    ++n;
  }
  ASSERT_GE(n, 10000u);
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
  EXPECT_NEAR(sd, 0.075, 0.0075);
  EXPECT_LT(std::abs(mean), 3.0 * 0.075 / std::sqrt(static_cast<double>(n)));
}

TEST(Generate, TraversalsAreDisjointIntervals)
{
  const auto c = intersection_scenario(2, 0, 0.0, 1);
  const auto s = generate(c);
  ASSERT_EQ(s.truth.traversals.size(), 2u);
  const auto & [a0, a1] = s.truth.traversals[0];
  const auto & [b0, b1] = s.truth.traversals[1];
  EXPECT_LT(a0, a1);
  EXPECT_LT(a1 + 10.0, b0);
  for (const auto & f : s.frames) {
    for (int id : f.ids) {
      if (id == 0) {
        const bool inside = (f.timestamp >= a0 && f.timestamp <= a1) || (f.timestamp >= b0 && f.timestamp <= b1);
        EXPECT_TRUE(inside) << f.timestamp;
      }
    }
  }
}

TEST(Generate, Deterministic)
{
  auto c = intersection_scenario(2, 5, 0.2, 9);
  c.noise.sigma_box = 1.0;
  c.noise.detection_dropout = 0.1;
  const auto a = generate(c);
  const auto b = generate(c);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(a.log, b.log);
  c.rng_seed = 10;
  EXPECT_NE(generate(c).log, a.log);
}

TEST(Generate, TargetNeverVisibleIsAnError)
{
  auto c = straight_drive();
  c.camera_look_at = Vec3(0.0, -60.0, 7.0);  // facing away from the road
  try {
    generate(c);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::kGeneration);
  }
}

TEST(Generate, InvalidConfigurationIsRejected)
{
  auto c = straight_drive();
  c.traversal_count = 0;
  EXPECT_THROW(c.validate(), Error);
  c = straight_drive();
  c.noise.detection_dropout = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = straight_drive();
  c.min_visible_fraction = -0.1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(VehicleBox, VisibilityFraction)
{
  const auto c = straight_drive();
  const auto cam = c.camera();
  // Half of the vehicle hangs over the left image border.
  LocalizationSample pose;
  double u_left = 0.0;
  for (double x = 0.0; x > -80.0; x -= 0.05) {
    pose.position = Vec3(x, 0.0, 0.0);
    const auto b = vehicle_box(pose, c.target.dims, c.intrinsics, cam, 0.0);
    if (b && b->left() <= 0.0) {
      u_left = x;
      break;
    }
  }
  ASSERT_LT(u_left, 0.0);
  pose.position = Vec3(u_left - 1.0, 0.0, 0.0);
  const auto loose = vehicle_box(pose, c.target.dims, c.intrinsics, cam, 0.0);
  const auto strict = vehicle_box(pose, c.target.dims, c.intrinsics, cam, 0.99);
  ASSERT_TRUE(loose);
  EXPECT_DOUBLE_EQ(loose->left(), 0.0);
  EXPECT_FALSE(strict);
}

TEST(Occlude, EmptyRegionListIsIdentity)
{
  const auto s = generate(straight_drive());
  EXPECT_EQ(occlude(s.frames, {}), s.frames);
}

TEST(Occlude, FullImageDropRemovesEverything)
{
  const auto s = generate(straight_drive());
  const std::vector<ObstacleRegion> full{{0.0, 0.0, 1920.0, 1200.0, OcclusionPolicy::kDrop}};
  EXPECT_TRUE(occlude(s.frames, full).empty());
}

TEST(Occlude, StripCreatesGapWhileCenterInside)
{
  const auto s = generate(straight_drive());
  const ObstacleRegion strip{800.0, 0.0, 1000.0, 1200.0, OcclusionPolicy::kDrop};
  const auto out = occlude(s.frames, std::vector<ObstacleRegion>{strip});
  std::size_t cursor = 0;
  int dropped = 0;
  for (const auto & f : s.frames) {
    if (f.boxes.empty()) {
      continue;
    }
    const bool inside = f.boxes[0].u >= strip.u_min && f.boxes[0].u <= strip.u_max;
    const bool kept = cursor < out.size() && out[cursor].timestamp == f.timestamp;
    EXPECT_EQ(kept, !inside) << f.timestamp;
    cursor += kept ? 1 : 0;
    dropped += inside ? 1 : 0;
  }
  EXPECT_GT(dropped, 0);
  EXPECT_EQ(cursor, out.size());
}

TEST(Occlude, ShrinkKeepsWiderVisibleSide)
{
  DetectionFrame f;
  f.timestamp = 1.0;
  f.boxes.push_back({500.0, 300.0, 200.0, 100.0});  // spans 400..600
  f.ids.push_back(4);
  const ObstacleRegion r{450.0, 0.0, 520.0, 1200.0, OcclusionPolicy::kShrink};
  const auto out = occlude({f}, std::vector<ObstacleRegion>{r});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].boxes[0].left(), 520.0);
  EXPECT_DOUBLE_EQ(out[0].boxes[0].right(), 600.0);
  EXPECT_EQ(out[0].ids, std::vector<int>{4});
}

TEST(IntersectionScenario, DistractorJitterIsSeeded)
{
  auto a = intersection_scenario(2, 5, 0.0, 1);
  auto b = a;
  jitter_distractors(a, 3);
  jitter_distractors(b, 3);
  ASSERT_EQ(a.distractors.size(), 5u);
  for (std::size_t i = 0; i < a.distractors.size(); ++i) {
    EXPECT_EQ(a.distractors[i].start_time, b.distractors[i].start_time);
    EXPECT_EQ(a.distractors[i].speed, b.distractors[i].speed);
    EXPECT_GE(a.distractors[i].start_time, 0.0);
  }
}

}  // namespace
}  // namespace roadcal
