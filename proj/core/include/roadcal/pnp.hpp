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

#ifndef ROADCAL__PNP_HPP_
#define ROADCAL__PNP_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "roadcal/geometry.hpp"

namespace roadcal
{

struct Correspondence
{
  WorldPoint world = WorldPoint::Zero();
  PixelPoint pixel = PixelPoint::Zero();
  double timestamp = 0.0;
};

struct RansacParams
{
  int max_iterations = 500;
  double inlier_threshold_px = 8.0;
  double min_inlier_ratio = 0.5;
  std::uint64_t rng_seed = 7;

  void validate() const;
};

struct RansacResult
{
  ExtrinsicCalibration calib;
  std::vector<bool> inliers;
  double median_error_px = 0.0;
  std::size_t inlier_count = 0;
  int best_iteration = -1;
  // Median inlier error of the winning minimal-sample model.
  double sample_median_error_px = 0.0;
};

/// Efficient PnP with barycentric control points. Non-planar inputs use four
/// control points; (near-)planar inputs additionally try the three control
/// point variant, and the candidate with the lowest reprojection RMS wins.
/// Throws kInsufficientData below four correspondences and kDegenerate for
/// collinear world points.
ExtrinsicCalibration epnp(std::span<const Correspondence> corrs, const Intrinsics & intr);

/// Euclidean pixel distance per correspondence; +inf for points behind the
/// camera.
std::vector<double> reprojection_errors(
  const ExtrinsicCalibration & extr, const Intrinsics & intr,
  std::span<const Correspondence> corrs);

double reprojection_rms(
  const ExtrinsicCalibration & extr, const Intrinsics & intr,
  std::span<const Correspondence> corrs);

/// Levenberg-Marquardt polish of the squared reprojection error. Never
/// returns a pose with higher cost than `init`.
ExtrinsicCalibration refine_pose(
  std::span<const Correspondence> corrs, const Intrinsics & intr,
  const ExtrinsicCalibration & init, int max_iterations = 50);

/// Minimal four-point RANSAC around epnp. The winning consensus set is refit
/// and the returned pose never has a larger median inlier error than the
/// winning sample model. Throws kNoConsensus when the best consensus falls
/// short of `min_inlier_ratio`.
/// Rejects physically implausible models before they are scored.
using ModelCheck = std::function<bool(const ExtrinsicCalibration &)>;

RansacResult ransac_pnp(
  std::span<const Correspondence> corrs, const Intrinsics & intr, const RansacParams & params,
  const ModelCheck & is_valid = {});

double median(std::vector<double> values);

}  // namespace roadcal

#endif  // ROADCAL__PNP_HPP_
