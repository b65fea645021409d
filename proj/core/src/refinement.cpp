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

#include "roadcal/refinement.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "roadcal/errors.hpp"

namespace roadcal
{

void VehicleDims::validate() const
{
  if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorCode::kConfig, "vehicle dimensions must be positive");
  }
}

void RefinementSettings::validate() const
{
  if (max_iterations < 0 || !(gradient_tolerance > 0.0) || !(step_tolerance > 0.0) ||
      correspondence_rounds < 1 || truncation_margin_px < 0.0) {
    throw Error(ErrorCode::kConfig, "invalid refinement settings");
  }
}

GroundPlane fit_ground_plane(std::span<const WorldPoint> points)
{
  if (points.size() < 3) {
    throw Error(ErrorCode::kDegenerate, "ground plane needs at least 3 points");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto & p : points) {
    centroid += p;
  }
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto & p : points) {
    scatter += (p - centroid) * (p - centroid).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 sigma = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (!(sigma[2] > 0.0) || sigma[1] < 1e-6 * sigma[2]) {
    throw Error(ErrorCode::kDegenerate, "localization track is collinear");
  }
  GroundPlane plane;
  plane.point = centroid;
  plane.normal = eig.eigenvectors().col(0).normalized();
  if (plane.normal.z() < 0.0) {
    plane.normal = -plane.normal;
  }
  return plane;
}

GroundPlane fit_ground_plane(std::span<const LocalizationSample> samples, const Vec3 & anchor)
{
  std::vector<WorldPoint> points;
  points.reserve(samples.size());
  for (const auto & s : samples) {
    points.push_back(s.position - anchor);
  }
  return fit_ground_plane(points);
}

std::array<WorldPoint, 4> vehicle_footprint(
  const LocalizationSample & pose, const VehicleDims & dims, const Vec3 & anchor)
{
  const Mat3 r = pose.orientation();
  const WorldPoint center = pose.position - anchor;
  const double l = 0.5 * dims.length;
  const double w = 0.5 * dims.width;
  return {
    center + r * Vec3(l, w, 0.0),
    center + r * Vec3(l, -w, 0.0),
    center + r * Vec3(-l, -w, 0.0),
    center + r * Vec3(-l, w, 0.0),
  };
}

namespace
{

double point_segment_distance(const Vec3 & p, const Vec3 & a, const Vec3 & b)
{
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

bool truncated(const BoundingBox & box, const Intrinsics & intr, double margin)
{
  return box.left() <= margin || box.top() <= margin || box.right() >= intr.width - margin ||
         box.bottom() >= intr.height - margin;
}

}  // namespace

std::optional<PixelPoint> clamp_to_edge(
  const ExtrinsicCalibration & calib, const Intrinsics & intr, const RefinedPair & pair)
{
  const auto px = try_project(intr, calib, pair.world_corner);
  if (!px) {
    return std::nullopt;
  }
  return PixelPoint(std::clamp(px->x(), pair.edge_left.x(), pair.edge_right.x()), pair.edge_left.y());
}

std::vector<RefinedPair> refine_correspondences(
  std::span<const SyncedPair> pairs, const Vec3 & anchor, const ExtrinsicCalibration & calib,
  const VehicleDims & dims, const GroundPlane & plane, const Intrinsics & intr,
  const RefinementSettings & settings)
{
  const WorldPoint cam = camera_center(calib);
  std::vector<RefinedPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const BoundingBox & box = pairs[i].box;
    if (settings.skip_truncated_boxes && truncated(box, intr, settings.truncation_margin_px)) {
      continue;
    }
    const PixelPoint left(box.left(), box.bottom());
    const PixelPoint right(box.right(), box.bottom());
    const auto g_left = try_backproject_to_plane(intr, calib, left, plane);
    const auto g_right = try_backproject_to_plane(intr, calib, right, plane);
    if (!g_left || !g_right) {
      continue;
    }
    const auto corners = vehicle_footprint(pairs[i].pose, dims, anchor);
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    double best_range = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 4; ++c) {
      const double d = point_segment_distance(corners[c], *g_left, *g_right);
      const double range = (corners[c] - cam).norm();
      if (d < best_dist - 1e-9 || (std::abs(d - best_dist) <= 1e-9 && range < best_range)) {
        best = c;
        best_dist = d;
        best_range = range;
      }
    }
    RefinedPair rp;
    rp.world_corner = corners[best];
    rp.edge_left = left;
    rp.edge_right = right;
    rp.corner_index = best;
    rp.source_index = i;
    const auto anchor_px = clamp_to_edge(calib, intr, rp);
    if (!anchor_px) {
      continue;
    }
    rp.pixel_anchor = *anchor_px;
    out.push_back(rp);
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoRefinablePairs, "no pair could be refined");
  }
  return out;
}

std::vector<RefinedPair> refine_correspondences(
  const Hypothesis & h, const ExtrinsicCalibration & calib, const VehicleDims & dims,
  const GroundPlane & plane, const Intrinsics & intr, const RefinementSettings & settings)
{
  return refine_correspondences(h.pairs, h.anchor, calib, dims, plane, intr, settings);
}

std::optional<double> delta_p(
  const ExtrinsicCalibration & calib, const RefinedPair & pair, const GroundPlane & plane,
  const Intrinsics & intr)
{
  const auto ground = try_backproject_to_plane(intr, calib, pair.pixel_anchor, plane);
  if (!ground) {
    return std::nullopt;
  }
  return (*ground - pair.world_corner).norm();
}

namespace
{

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Perturbation about the camera center keeps the parameterization
// independent of where the world origin sits.
ExtrinsicCalibration perturb(const ExtrinsicCalibration & base, const Vec6 & x)
{
  const Mat3 r = nearest_rotation(rotation_exp(x.head<3>()) * base.rotation);
  const WorldPoint c = camera_center(base) + x.tail<3>();
  return ExtrinsicCalibration::from_center(r, c, base.anchor);
}

constexpr double kFailurePenalty = 1e3;

class DeltaPResiduals
{
public:
  DeltaPResiduals(
    std::span<const RefinedPair> pairs, const Intrinsics & intr, const GroundPlane & plane, bool reclamp)
  : pairs_(pairs), intr_(intr), plane_(plane), reclamp_(reclamp)
  {
  }

  Eigen::VectorXd operator()(const ExtrinsicCalibration & calib) const
  {
    Eigen::VectorXd r(3 * static_cast<Eigen::Index>(pairs_.size()));
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto k = 3 * static_cast<Eigen::Index>(i);
      const RefinedPair & p = pairs_[i];
      std::optional<PixelPoint> px = reclamp_ ? clamp_to_edge(calib, intr_, p) : p.pixel_anchor;
      std::optional<WorldPoint> ground;
      if (px) {
        ground = try_backproject_to_plane(intr_, calib, *px, plane_);
      }
      if (ground) {
        r.segment<3>(k) = *ground - p.world_corner;
      } else {
        r.segment<3>(k) = Vec3(kFailurePenalty, 0.0, 0.0);
      }
    }
    return r;
  }

private:
  std::span<const RefinedPair> pairs_;
  const Intrinsics & intr_;
  const GroundPlane & plane_;
  bool reclamp_;
};

}  // namespace

RegistrationResult register_calibration(
  std::span<const RefinedPair> pairs_in, const ExtrinsicCalibration & init, const Intrinsics & intr,
  const GroundPlane & plane, const RefinementSettings & settings)
{
  settings.validate();
  std::vector<RefinedPair> pairs;
  for (const auto & p : pairs_in) {
    if (delta_p(init, p, plane, intr)) {
      pairs.push_back(p);
    }
  }
  if (pairs.size() < 4) {
    throw Error(ErrorCode::kInsufficientData, "registration needs at least 4 refinable pairs");
  }
  const DeltaPResiduals residuals(pairs, intr, plane, settings.reclamp_each_iteration);

  RegistrationResult result;
  result.calib = init;
  Eigen::VectorXd r = residuals(init);
  double cost = r.squaredNorm();
  result.initial_cost = cost;

  constexpr double kRotStep = 1e-7;
  constexpr double kTransStep = 1e-6;
  double lambda = 1e-4;
  int accepted_steps = 0;
  bool stationary_at_start = false;

  for (int it = 0; it < settings.max_iterations; ++it) {
    result.iterations = it + 1;
    Eigen::MatrixXd jac(r.size(), 6);
    for (int k = 0; k < 6; ++k) {
      const double h = k < 3 ? kRotStep : kTransStep;
      Vec6 dx = Vec6::Zero();
      dx[k] = h;
      const Eigen::VectorXd plus = residuals(perturb(result.calib, dx));
      dx[k] = -h;
      const Eigen::VectorXd minus = residuals(perturb(result.calib, dx));
      jac.col(k) = (plus - minus) / (2.0 * h);
    }
    const Vec6 grad = jac.transpose() * r;
    if (grad.norm() < settings.gradient_tolerance) {
      stationary_at_start = accepted_steps == 0;
      break;
    }
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    bool accepted = false;
    Vec6 step = Vec6::Zero();
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-9);
      step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const ExtrinsicCalibration trial = perturb(result.calib, step);
      const Eigen::VectorXd trial_r = residuals(trial);
      const double trial_cost = trial_r.squaredNorm();
      if (trial_cost < cost) {
        result.calib = trial;
        r = trial_r;
        cost = trial_cost;
        lambda = std::max(lambda * 0.2, 1e-12);
        accepted = true;
        ++accepted_steps;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || step.norm() < settings.step_tolerance) {
      break;
    }
  }
  result.final_cost = cost;
  result.non_improvement = accepted_steps == 0 && !stationary_at_start;
  if (result.non_improvement) {
    result.calib = init;
    result.final_cost = result.initial_cost;
  }
  return result;
}

Metrics evaluate(
  const ExtrinsicCalibration & calib, std::span<const RefinedPair> pairs, const GroundPlane & plane,
  const Intrinsics & intr)
{
  Metrics m;
  const WorldPoint cam = camera_center(calib);
  double sum_dp = 0.0;
  double sum_e = 0.0;
  for (const auto & p : pairs) {
    const auto dp = delta_p(calib, p, plane, intr);
    if (!dp) {
      ++m.excluded;
      continue;
    }
    const double range = (p.world_corner - cam).norm();
    const double e = 100.0 * *dp / range;
    m.samples.push_back({*dp, range});
    sum_dp += *dp;
    sum_e += e;
    m.delta_p_max = std::max(m.delta_p_max, *dp);
    m.e_max = std::max(m.e_max, e);
  }
  m.evaluated = m.samples.size();
  if (m.evaluated == 0) {
    throw Error(ErrorCode::kNoRefinablePairs, "no evaluable pairs");
  }
  m.delta_p_mean = sum_dp / static_cast<double>(m.evaluated);
  m.e_mean = sum_e / static_cast<double>(m.evaluated);
  return m;
}

RegistrationResult refine_hypothesis(
  const Hypothesis & h, const ExtrinsicCalibration & init, const VehicleDims & dims,
  const GroundPlane & plane, const Intrinsics & intr, const RefinementSettings & settings)
{
  RegistrationResult result;
  result.calib = init;
  bool first = true;
  for (int round = 0; round < settings.correspondence_rounds; ++round) {
    const auto pairs = refine_correspondences(h, result.calib, dims, plane, intr, settings);
    const RegistrationResult step = register_calibration(pairs, result.calib, intr, plane, settings);
    if (first) {
      result.initial_cost = step.initial_cost;
      result.non_improvement = step.non_improvement;
      first = false;
    }
    result.calib = step.calib;
    result.final_cost = step.final_cost;
    result.iterations += step.iterations;
    if (step.non_improvement) {
      break;
    }
  }
  return result;
}

Hypothesis merge_members(const HypothesisGroup & group)
{
  Hypothesis merged;
  merged.track_id = -1;
  if (!group.members.empty()) {
    merged.anchor = group.members.front().anchor;
  }
  for (const auto & m : group.members) {
    merged.pairs.insert(merged.pairs.end(), m.pairs.begin(), m.pairs.end());
  }
  return merged;
}

namespace
{

struct Scored
{
  ExtrinsicCalibration calib;
  Metrics metrics;
  int track_id = -1;
  bool non_improvement = false;
  bool scored = false;
};

std::optional<Metrics> score_on(
  const Hypothesis & merged, const ExtrinsicCalibration & calib, const VehicleDims & dims,
  const GroundPlane & plane, const Intrinsics & intr, const RefinementSettings & settings)
{
  try {
    const auto pairs = refine_correspondences(merged, calib, dims, plane, intr, settings);
    return evaluate(calib, pairs, plane, intr);
  } catch (const Error & e) {
    if (e.code() == ErrorCode::kNoRefinablePairs) {
      return std::nullopt;
    }
    throw;
  }
}

}  // namespace

CalibrationResult merge_and_select(
  std::span<const HypothesisGroup> groups, const VehicleDims & dims, const GroundPlane & plane,
  const Intrinsics & intr, const RefinementSettings & settings)
{
  if (groups.empty()) {
    throw Error(
      ErrorCode::kInsufficientTraversals,
      "no hypothesis group survived; record more traversals of the calibration vehicle");
  }
  settings.validate();
  dims.validate();

  std::optional<CalibrationResult> best;
  std::vector<CandidateScore> all_candidates;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const HypothesisGroup & group = groups[g];
    const Hypothesis merged = merge_members(group);

    std::vector<Scored> candidates;
    auto refine_or_keep = [&](const Hypothesis & h, const ExtrinsicCalibration & init) {
      try {
        return refine_hypothesis(h, init, dims, plane, intr, settings);
      } catch (const Error & e) {
        if (e.code() != ErrorCode::kNoRefinablePairs && e.code() != ErrorCode::kInsufficientData) {
          throw;
        }
        RegistrationResult kept;
        kept.calib = init;
        kept.non_improvement = true;
        return kept;
      }
    };

    // The ensemble starts from the member calibration that scores best on
    // the merged data, falling back to the lowest reprojection error.
    const Hypothesis * seed = nullptr;
    for (const auto & m : group.members) {
      if (seed == nullptr || m.median_reproj_px < seed->median_reproj_px) {
        seed = &m;
      }
      const RegistrationResult refined = refine_or_keep(m, *m.calib);
      candidates.push_back({refined.calib, {}, m.track_id, refined.non_improvement});
      if (const auto metrics = score_on(merged, refined.calib, dims, plane, intr, settings)) {
        candidates.back().metrics = *metrics;
        candidates.back().scored = true;
      }
    }
    ExtrinsicCalibration start = *seed->calib;
    double start_score = std::numeric_limits<double>::infinity();
    for (const auto & c : candidates) {
      if (c.scored && c.metrics.delta_p_mean < start_score) {
        start = c.calib;
        start_score = c.metrics.delta_p_mean;
      }
    }
    {
      const RegistrationResult refined = refine_or_keep(merged, start);
      Scored s{refined.calib, {}, -1, refined.non_improvement};
      if (const auto metrics = score_on(merged, refined.calib, dims, plane, intr, settings)) {
        s.metrics = *metrics;
        s.scored = true;
      }
      candidates.insert(candidates.begin(), s);
    }

    std::optional<std::size_t> winner;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (!candidates[c].scored) {
        continue;
      }
      const Metrics * metrics = &candidates[c].metrics;
      all_candidates.push_back(
        {static_cast<int>(g), candidates[c].track_id, candidates[c].calib, metrics->delta_p_mean});
      // The merged calibration (index 0) only loses to a strictly better track.
      if (!winner || metrics->delta_p_mean < candidates[*winner].metrics.delta_p_mean) {
        winner = c;
      }
    }
    if (!winner) {
      continue;
    }
    const Scored & w = candidates[*winner];
    if (!best || w.metrics.delta_p_mean < best->metrics.delta_p_mean) {
      CalibrationResult r;
      r.calib = w.calib;
      r.metrics = w.metrics;
      r.group_index = static_cast<int>(g);
      for (const auto & m : group.members) {
        r.member_track_ids.push_back(m.track_id);
      }
      r.selected_track_id = w.track_id;
      r.pair_count = merged.pairs.size();
      r.non_improvement = w.non_improvement;
      best = std::move(r);
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoRefinablePairs, "no group produced an evaluable calibration");
  }
  best->candidates = std::move(all_candidates);
  return *best;
}

}  // namespace roadcal
