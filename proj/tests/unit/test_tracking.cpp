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

#include <algorithm>
#include <random>
#include <set>

#include "../support/oracles.hpp"
#include "roadcal/assignment.hpp"
#include "roadcal/errors.hpp"
#include "roadcal/tracking.hpp"

namespace roadcal
{
namespace
{

BoundingBox box(double u, double v, double w, double h) { return {u, v, w, h}; }

std::vector<DetectionFrame> moving_box(int frames, std::set<int> missing = {})
{
  std::vector<DetectionFrame> out;
  for (int k = 0; k < frames; ++k) {
    DetectionFrame f;
    f.timestamp = 0.1 * k;
    if (!missing.count(k)) {
      f.boxes.push_back(box(100.0 + 5.0 * k, 200.0, 40.0, 30.0));
    }
    out.push_back(f);
  }
  return out;
}

TEST(Iou, Examples)
{
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 2, 2), box(0, 0, 2, 2)), 1.0);
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 2, 2), box(10, 0, 2, 2)), 0.0);
  EXPECT_NEAR(iou(box(0, 0, 2, 2), box(1, 0, 2, 2)), 1.0 / 3.0, 1e-15);
}

TEST(Diou, Examples)
{
  EXPECT_DOUBLE_EQ(diou(box(0, 0, 2, 2), box(0, 0, 2, 2)), 1.0);
  EXPECT_NEAR(diou(box(0, 0, 2, 2), box(1, 0, 2, 2)), 1.0 / 3.0 - 1.0 / 13.0, 1e-15);
  // Far apart: IoU 0 and the distance term tends to 1.
  const double far = diou(box(0, 0, 2, 2), box(1e6, 0, 2, 2));
  EXPECT_LT(far, -0.99);
  EXPECT_GT(far, -1.0);
}

TEST(AssociationCost, Examples)
{
  EXPECT_DOUBLE_EQ(association_cost(box(0, 0, 2, 2), box(0, 0, 2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(association_cost(box(0, 0, 2, 2), box(5, 0, 2, 2)), 2.0);
  EXPECT_NEAR(association_cost(box(0, 0, 2, 2), box(1, 0, 2, 2)), 1.0 - (1.0 / 3.0 - 1.0 / 13.0), 1e-15);
}

TEST(AssociationCost, SymmetricAndBounded)
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(0.0, 100.0);
  std::uniform_real_distribution<double> size(1.0, 60.0);
  for (int i = 0; i < 5000; ++i) {
    const auto a = box(pos(rng), pos(rng), size(rng), size(rng));
    const auto b = box(pos(rng), pos(rng), size(rng), size(rng));
    const double ab = association_cost(a, b);
    ASSERT_EQ(ab, association_cost(b, a));
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 2.0);
  }
}

TEST(Assignment, SmallExamples)
{
  EXPECT_TRUE(solve_assignment(Eigen::MatrixXd(0, 0)).empty());
  Eigen::MatrixXd one(1, 1);
  one << 0.5;
  EXPECT_EQ(solve_assignment(one), (Assignment{{0, 0}}));
  Eigen::MatrixXd two(2, 2);
  two << 0.1, 2.0, 2.0, 0.2;
  EXPECT_EQ(assign(two), (Assignment{{0, 0}, {1, 1}}));
}

TEST(Assignment, ForbiddenPairsAreDropped)
{
  Eigen::MatrixXd c(2, 2);
  c << 0.3, 2.0, 2.0, 2.0;
  EXPECT_EQ(assign(c), (Assignment{{0, 0}}));
}

TEST(Assignment, MatchesExhaustiveSearch)
{
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = dim(rng);
    const int cols = dim(rng);
    Eigen::MatrixXd c(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        c(i, j) = u(rng);
      }
    }
    const auto pairs = solve_assignment(c);
    ASSERT_EQ(static_cast<int>(pairs.size()), std::min(rows, cols));
    std::set<int> rs;
    std::set<int> cs;
    for (const auto & [r, col] : pairs) {
      rs.insert(r);
      cs.insert(col);
    }
    ASSERT_EQ(rs.size(), pairs.size());
    ASSERT_EQ(cs.size(), pairs.size());
    ASSERT_NEAR(assignment_cost(c, pairs), oracle::brute_force_min_cost(c), 1e-12);
  }
}

TEST(Assignment, NoForbiddenPairSurvives)
{
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd c(5, 6);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 6; ++j) {
        c(i, j) = u(rng) < 0.5 ? 2.0 : u(rng);
      }
    }
    for (const auto & [r, col] : assign(c)) {
      ASSERT_LT(c(r, col), 2.0 - 1e-12);
    }
  }
}

TEST(Tracker, SingleMovingBox)
{
  const auto tracks = run_tracker(moving_box(20), TrackerParams{});
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].detections.size(), 20u);
}

TEST(Tracker, BridgesShortGap)
{
  TrackerParams p;
  p.max_extrapolation_frames = 5;
  const auto tracks = run_tracker(moving_box(20, {8, 9}), p);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].detections.size(), 18u);
  for (const auto & d : tracks[0].detections) {
    EXPECT_FALSE(d.extrapolated);
  }
}

TEST(Tracker, LongGapSplitsTrack)
{
  TrackerParams p;
  p.max_extrapolation_frames = 5;
  p.frame_interval_s = 0.1;
  std::set<int> gap;
  for (int k = 8; k < 8 + 6; ++k) {
    gap.insert(k);
  }
  EXPECT_EQ(run_tracker(moving_box(30, gap), p).size(), 2u);
  gap.erase(13);
  EXPECT_EQ(run_tracker(moving_box(30, gap), p).size(), 1u);
}

TEST(Tracker, AbsentFramesCountAsMisses)
{
  TrackerParams p;
  p.max_extrapolation_frames = 5;
  auto frames = moving_box(30);
  frames.erase(frames.begin() + 8, frames.begin() + 14);
  EXPECT_EQ(run_tracker(frames, p).size(), 2u);
}

TEST(Tracker, NonMonotonicTimestampsAreRejected)
{
  auto frames = moving_box(5);
  std::swap(frames[1].timestamp, frames[2].timestamp);
  try {
    run_tracker(frames, TrackerParams{});
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::kInput);
  }
}

TEST(Tracker, ShortTracksAreDropped)
{
  TrackerParams p;
  p.min_track_detections = 4;
  EXPECT_TRUE(run_tracker(moving_box(3), p).empty());
}

std::vector<DetectionFrame> random_scene(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Mover
  {
    double u0, v0, du, dv, w, h;
  };
  std::vector<Mover> movers;
  for (int i = 0; i < 6; ++i) {
    movers.push_back(
      {u(rng) * 800, u(rng) * 600, (u(rng) - 0.5) * 30, (u(rng) - 0.5) * 20, 20 + u(rng) * 80,
       20 + u(rng) * 60});
  }
  std::vector<DetectionFrame> frames;
  for (int k = 0; k < 60; ++k) {
    DetectionFrame f;
    f.timestamp = 0.1 * k;
    for (const auto & m : movers) {
      if (u(rng) < 0.8) {
        f.boxes.push_back(box(m.u0 + k * m.du, m.v0 + k * m.dv, m.w, m.h));
      }
    }
    if (u(rng) < 0.3) {
      f.boxes.push_back(box(u(rng) * 800, u(rng) * 600, 30, 30));
    }
    frames.push_back(f);
  }
  return frames;
}

TEST(Tracker, PartitionProperty)
{
  std::mt19937_64 rng(24);
  TrackerParams p;
  p.min_track_detections = 1;
  for (int trial = 0; trial < 30; ++trial) {
    const auto frames = random_scene(rng);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t total = 0;
    for (const auto & f : frames) {
      total += f.boxes.size();
    }
    for (const auto & t : run_tracker(frames, p)) {
      for (const auto & d : t.detections) {
        ASSERT_FALSE(d.extrapolated);
        ASSERT_EQ(frames[d.frame_index].boxes[d.box_index], d.box);
        ASSERT_TRUE(seen.insert({d.frame_index, d.box_index}).second);
      }
    }
    ASSERT_EQ(seen.size(), total);
  }
}

TEST(Tracker, Deterministic)
{
  std::mt19937_64 rng(25);
  const auto frames = random_scene(rng);
  const auto a = run_tracker(frames, TrackerParams{});
  const auto b = run_tracker(frames, TrackerParams{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].id, b[i].id);
    ASSERT_EQ(a[i].detections.size(), b[i].detections.size());
    for (std::size_t j = 0; j < a[i].detections.size(); ++j) {
      ASSERT_EQ(a[i].detections[j].box, b[i].detections[j].box);
    }
  }
}

TEST(Tracker, ImageExitRetiresCoastingTrack)
{
  // The track coasts out through the right border; a box entering near the
  // border afterwards would otherwise be attached to it.
  std::vector<DetectionFrame> frames;
  for (int k = 0; k < 8; ++k) {
    DetectionFrame f;
    f.timestamp = 0.1 * k;
    if (k < 5) {
      f.boxes.push_back(box(300.0 + 20.0 * k, 200.0, 100.0, 60.0));
    } else if (k == 7) {
      f.boxes.push_back(box(390.0, 200.0, 100.0, 60.0));
    }
    frames.push_back(f);
  }
  TrackerParams p;
  p.min_track_detections = 1;
  EXPECT_EQ(run_tracker(frames, p).size(), 1u);
  p.image_width = 400;
  p.image_height = 400;
  EXPECT_EQ(run_tracker(frames, p).size(), 2u);
}

TEST(TracksFromIds, GroupsByIdentifier)
{
  std::vector<DetectionFrame> frames;
  for (int k = 0; k < 5; ++k) {
    frames.push_back({0.1 * k, {box(10, 10, 5, 5), box(50, 50, 5, 5)}, {7, 3}});
  }
  const auto tracks = tracks_from_ids(frames, 4);
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].id, 3);
  EXPECT_EQ(tracks[1].id, 7);
  frames[2].ids.pop_back();
  EXPECT_THROW(tracks_from_ids(frames, 4), Error);
}

}  // namespace
}  // namespace roadcal
