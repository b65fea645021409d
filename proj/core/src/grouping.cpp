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

#include "roadcal/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "roadcal/errors.hpp"

namespace roadcal
{

void GroupingParams::validate() const
{
  const bool ok = max_r_out >= 0.0 && max_r_out <= 1.0 && min_r_ov >= 0.0 && min_r_ov <= 1.0 &&
                  min_r_sim >= -1.0 / 3.0 && min_r_sim <= 1.0 && k_px > 0.0 &&
                  dbscan_eps_m > 0.0 && dbscan_min_pts >= 1;
  if (!ok) {
    throw Error(ErrorCode::kConfig, "invalid grouping parameters");
  }
}

double outlier_ratio(const Hypothesis & hi, const Hypothesis & hj, const Intrinsics & intr)
{
  if (hi.pairs.empty()) {
    return 0.0;
  }
  std::size_t outside = 0;
  for (std::size_t k = 0; k < hi.pairs.size(); ++k) {
    outside += in_frustum(intr, *hj.calib, hi.position(k)) ? 0 : 1;
  }
  return static_cast<double>(outside) / static_cast<double>(hi.pairs.size());
}

double distance_to_box(const PixelPoint & px, const BoundingBox & box)
{
  const double du = std::max({box.left() - px.x(), 0.0, px.x() - box.right()});
  const double dv = std::max({box.top() - px.y(), 0.0, px.y() - box.bottom()});
  return std::hypot(du, dv);
}

double overlap_ratio(const Hypothesis & hi, const Hypothesis & hj, const Intrinsics & intr, double k_px)
{
  if (hi.pairs.empty()) {
    return 0.0;
  }
  std::size_t near = 0;
  for (std::size_t k = 0; k < hi.pairs.size(); ++k) {
    const auto px = try_project(intr, *hj.calib, hi.position(k));
    if (!px) {
      continue;
    }
    for (const auto & pair : hj.pairs) {
      if (distance_to_box(*px, pair.box) <= k_px) {
        ++near;
        break;
      }
    }
  }
  return static_cast<double>(near) / static_cast<double>(hi.pairs.size());
}

double rotational_similarity(const Mat3 & ri, const Mat3 & rj)
{
  return (rj.transpose() * ri).trace() / 3.0;
}

SimilarityScores symmetric_scores(
  const Hypothesis & a, const Hypothesis & b, const Intrinsics & intr, double k_px)
{
  SimilarityScores s;
  s.r_out = std::max(outlier_ratio(a, b, intr), outlier_ratio(b, a, intr));
  s.r_ov = std::min(overlap_ratio(a, b, intr, k_px), overlap_ratio(b, a, intr, k_px));
  s.r_sim = rotational_similarity(a.calib->rotation, b.calib->rotation);
  return s;
}

SimilarityGraph similarity_graph(
  std::span<const Hypothesis> hyps, const Intrinsics & intr, const GroupingParams & gp)
{
  gp.validate();
  SimilarityGraph g;
  g.node_count = hyps.size();
  g.adjacency.resize(hyps.size());
  for (const auto & h : hyps) {
    if (!h.calib) {
      throw Error(ErrorCode::kInput, "similarity graph requires calibrated hypotheses");
    }
  }
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    for (std::size_t j = i + 1; j < hyps.size(); ++j) {
      const SimilarityScores s = symmetric_scores(hyps[i], hyps[j], intr, gp.k_px);
      g.scores.push_back(s);
      if (s.r_out <= gp.max_r_out && s.r_ov >= gp.min_r_ov && s.r_sim >= gp.min_r_sim) {
        g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        g.adjacency[i].push_back(static_cast<int>(j));
        g.adjacency[j].push_back(static_cast<int>(i));
      }
    }
  }
  return g;
}

std::vector<int> dbscan(std::span<const Vec3> points, double eps, int min_pts)
{
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  const std::size_t n = points.size();
  std::vector<int> labels(n, kUnvisited);
  auto neighbors = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q) {
      if ((points[p] - points[q]).norm() <= eps) {
        out.push_back(q);
      }
    }
    return out;
  };

  int cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] != kUnvisited) {
      continue;
    }
    auto seeds = neighbors(p);
    if (static_cast<int>(seeds.size()) < min_pts) {
      labels[p] = kNoise;
      continue;
    }
    labels[p] = cluster;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (labels[q] == kNoise) {
        labels[q] = cluster;
      }
      if (labels[q] != kUnvisited) {
        continue;
      }
      labels[q] = cluster;
      const auto more = neighbors(q);
      if (static_cast<int>(more.size()) >= min_pts) {
        queue.insert(queue.end(), more.begin(), more.end());
      }
    }
    ++cluster;
  }
  return labels;
}

std::vector<HypothesisGroup> cluster_groups(
  const SimilarityGraph & graph, std::span<const Hypothesis> hyps, const GroupingParams & gp)
{
  std::vector<int> survivors;
  std::vector<Vec3> centers;
  for (std::size_t i = 0; i < graph.node_count; ++i) {
    if (graph.degree(static_cast<int>(i)) > 0) {
      survivors.push_back(static_cast<int>(i));
      centers.push_back(camera_center(*hyps[i].calib));
    }
  }
  const auto labels = dbscan(centers, gp.dbscan_eps_m, gp.dbscan_min_pts);
  const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t min_members = static_cast<std::size_t>(std::max(2, gp.dbscan_min_pts));

  std::vector<HypothesisGroup> groups;
  for (int c = 0; c < clusters; ++c) {
    HypothesisGroup g;
    for (std::size_t k = 0; k < survivors.size(); ++k) {
      if (labels[k] == c) {
        g.member_indices.push_back(survivors[k]);
        g.members.push_back(hyps[static_cast<std::size_t>(survivors[k])]);
      }
    }
    if (g.members.size() >= min_members) {
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

}  // namespace roadcal
