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
#include <random>

#include "../support/oracles.hpp"
#include "roadcal/errors.hpp"
#include "roadcal/pnp.hpp"

namespace roadcal
{
namespace
{

constexpr double kDeg = M_PI / 180.0;

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

TEST(Epnp, NoiseFreeGeneralPoints)
{
  std::mt19937_64 rng(31);
  const Intrinsics intr = oracle::test_intrinsics();
  for (int i = 0; i < 100; ++i) {
    const auto prob = oracle::random_pose_problem(rng, intr, 8, false);
    const auto est = epnp(prob.corrs, intr);
    EXPECT_TRUE(est.is_valid());
    EXPECT_LT(rotation_angle(est.rotation, prob.truth.rotation), 0.01 * kDeg);
    EXPECT_LT((est.translation - prob.truth.translation).norm(), 1e-3);
    EXPECT_LT(reprojection_rms(est, intr, prob.corrs), 1e-6);
  }
}

TEST(Epnp, FourCoplanarPoints)
{
  std::mt19937_64 rng(32);
  const Intrinsics intr = oracle::test_intrinsics();
  for (int i = 0; i < 50; ++i) {
    const auto prob = oracle::random_pose_problem(rng, intr, 4, true);
    const auto est = epnp(prob.corrs, intr);
    EXPECT_TRUE(est.is_valid());
    EXPECT_LT(reprojection_rms(est, intr, prob.corrs), 0.1);
  }
}

TEST(Epnp, ManyCoplanarPoints)
{
  std::mt19937_64 rng(33);
  const Intrinsics intr = oracle::test_intrinsics();
  for (int i = 0; i < 50; ++i) {
    const auto prob = oracle::random_pose_problem(rng, intr, 30, true);
    const auto est = epnp(prob.corrs, intr);
    EXPECT_LT(reprojection_rms(est, intr, prob.corrs), 1e-6);
    EXPECT_LT(rotation_angle(est.rotation, prob.truth.rotation), 0.01 * kDeg);
  }
}

TEST(Epnp, TooFewCorrespondences)
{
  std::mt19937_64 rng(34);
  auto prob = oracle::random_pose_problem(rng, oracle::test_intrinsics(), 3, false);
  EXPECT_EQ(code_of([&] { epnp(prob.corrs, oracle::test_intrinsics()); }), ErrorCode::kInsufficientData);
}

TEST(Epnp, CollinearPointsAreDegenerate)
{
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 6; ++i) {
    corrs.push_back({Vec3(i, 2.0 * i, 10.0), Vec2(100.0 + 10 * i, 100.0 + 20 * i), 0.0});
  }
  EXPECT_EQ(code_of([&] { epnp(corrs, oracle::test_intrinsics()); }), ErrorCode::kDegenerate);
}

TEST(ReprojectionErrors, Examples)
{
  std::mt19937_64 rng(35);
  const Intrinsics intr = oracle::test_intrinsics();
  auto prob = oracle::random_pose_problem(rng, intr, 10, false);
  for (double e : reprojection_errors(prob.truth, intr, prob.corrs)) {
    EXPECT_LT(e, 1e-9);
  }
  prob.corrs[3].pixel += Vec2(3.0, 4.0);
  EXPECT_NEAR(reprojection_errors(prob.truth, intr, prob.corrs)[3], 5.0, 1e-9);
}

TEST(ReprojectionErrors, MatchPerPointOracle)
{
  std::mt19937_64 rng(36);
  std::normal_distribution<double> n(0.0, 5.0);
  const Intrinsics intr = oracle::test_intrinsics();
  auto prob = oracle::random_pose_problem(rng, intr, 50, false);
  for (auto & c : prob.corrs) {
    c.pixel += Vec2(n(rng), n(rng));
  }
  const auto errs = reprojection_errors(prob.truth, intr, prob.corrs);
  for (std::size_t i = 0; i < errs.size(); ++i) {
    const Vec2 px = oracle::homogeneous_project(intr, prob.truth, prob.corrs[i].world);
    EXPECT_NEAR(errs[i], (px - prob.corrs[i].pixel).norm(), 1e-9);
  }
}

TEST(RefinePose, ReducesNoisyReprojection)
{
  std::mt19937_64 rng(37);
  std::normal_distribution<double> n(0.0, 1.0);
  const Intrinsics intr = oracle::test_intrinsics();
  auto prob = oracle::random_pose_problem(rng, intr, 40, false);
  for (auto & c : prob.corrs) {
    c.pixel += Vec2(n(rng), n(rng));
  }
  ExtrinsicCalibration init = prob.truth;
  init.rotation = oracle::random_small_rotation(rng, 2.0 * kDeg) * init.rotation;
  const auto refined = refine_pose(prob.corrs, intr, init);
  EXPECT_TRUE(refined.is_valid());
  EXPECT_LE(reprojection_rms(refined, intr, prob.corrs), reprojection_rms(prob.truth, intr, prob.corrs));
}

TEST(Ransac, CleanDataKeepsEverything)
{
  std::mt19937_64 rng(38);
  const Intrinsics intr = oracle::test_intrinsics();
  const auto prob = oracle::random_pose_problem(rng, intr, 50, false);
  const auto res = ransac_pnp(prob.corrs, intr, RansacParams{});
  EXPECT_EQ(res.inlier_count, 50u);
  for (bool b : res.inliers) {
    EXPECT_TRUE(b);
  }
  const auto plain = epnp(prob.corrs, intr);
  EXPECT_LT(rotation_angle(res.calib.rotation, plain.rotation), 1e-6);
  EXPECT_LT((res.calib.translation - plain.translation).norm(), 1e-6);
}

TEST(Ransac, RejectsPlantedOutliers)
{
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Intrinsics intr = oracle::test_intrinsics();
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto prob = oracle::random_pose_problem(rng, intr, 50, false);
    std::vector<bool> planted(50, false);
    for (int i = 0; i < 15; ++i) {
      planted[static_cast<std::size_t>(i)] = true;
      // Uniform over the image, but far enough from the truth to be gross.
      Vec2 px;
      do {
        px = Vec2(u(rng) * intr.width, u(rng) * intr.height);
      } while ((px - prob.corrs[static_cast<std::size_t>(i)].pixel).norm() < 50.0);
      prob.corrs[static_cast<std::size_t>(i)].pixel = px;
    }
    RansacParams params;
    params.rng_seed = static_cast<std::uint64_t>(trial);
    const auto res = ransac_pnp(prob.corrs, intr, params);
    bool excluded = true;
    for (std::size_t i = 0; i < planted.size(); ++i) {
      excluded = excluded && !(planted[i] && res.inliers[i]);
    }
    good += excluded && rotation_angle(res.calib.rotation, prob.truth.rotation) < 0.5 * kDeg;
    EXPECT_LE(res.median_error_px, res.sample_median_error_px + 1e-12);
  }
  EXPECT_GE(good, 19);
}

TEST(Ransac, InconsistentDataHasNoConsensus)
{
  std::vector<Correspondence> corrs{
    {Vec3(0, 0, 10), Vec2(1800, 100), 0},  {Vec3(5, 1, 12), Vec2(100, 1100), 0},
    {Vec3(-4, 3, 9), Vec2(1700, 1000), 0}, {Vec3(2, -6, 15), Vec2(200, 150), 0},
    {Vec3(7, 7, 20), Vec2(960, 40), 0},
  };
  EXPECT_EQ(
    code_of([&] { ransac_pnp(corrs, oracle::test_intrinsics(), RansacParams{}); }),
    ErrorCode::kNoConsensus);
}

TEST(Ransac, SameSeedSameResult)
{
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Intrinsics intr = oracle::test_intrinsics();
  auto prob = oracle::random_pose_problem(rng, intr, 40, false);
  for (int i = 0; i < 10; ++i) {
    prob.corrs[static_cast<std::size_t>(i)].pixel = Vec2(u(rng) * intr.width, u(rng) * intr.height);
  }
  const auto a = ransac_pnp(prob.corrs, intr, RansacParams{});
  const auto b = ransac_pnp(prob.corrs, intr, RansacParams{});
  EXPECT_EQ(a.calib.rotation, b.calib.rotation);
  EXPECT_EQ(a.calib.translation, b.calib.translation);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.best_iteration, b.best_iteration);
}

TEST(Ransac, ValidityPredicateFiltersModels)
{
  std::mt19937_64 rng(41);
  const Intrinsics intr = oracle::test_intrinsics();
  const auto prob = oracle::random_pose_problem(rng, intr, 20, false);
  const auto reject_all = [](const ExtrinsicCalibration &) { return false; };
  EXPECT_EQ(
    code_of([&] { ransac_pnp(prob.corrs, intr, RansacParams{}, reject_all); }), ErrorCode::kNoConsensus);
}

TEST(Ransac, ParamsValidate)
{
  RansacParams p;
  EXPECT_NO_THROW(p.validate());
  p.min_inlier_ratio = 1.5;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::kConfig);
}

TEST(Median, EvenAndOdd)
{
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

}  // namespace
}  // namespace roadcal
