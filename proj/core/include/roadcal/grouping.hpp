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

#ifndef ROADCAL__GROUPING_HPP_
#define ROADCAL__GROUPING_HPP_

#include <span>
#include <utility>
#include <vector>

#include "roadcal/geometry.hpp"
#include "roadcal/hypothesis.hpp"

namespace roadcal
{

struct SimilarityScores
{
  double r_out = 0.0;
  double r_ov = 0.0;
  double r_sim = 0.0;
};

struct GroupingParams
{
  double max_r_out = 0.1;
  double min_r_ov = 0.7;
  double min_r_sim = 0.99;
  double k_px = 20.0;
  double dbscan_eps_m = 3.0;
  int dbscan_min_pts = 2;

  void validate() const;
};

/// Undirected graph over hypothesis indices.
struct SimilarityGraph
{
  std::size_t node_count = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, lexicographic
  std::vector<std::vector<int>> adjacency;
  // Symmetrized scores of every evaluated pair, row-major (i, j), i < j.
  std::vector<SimilarityScores> scores;

  int degree(int node) const { return static_cast<int>(adjacency[static_cast<std::size_t>(node)].size()); }
};

struct HypothesisGroup
{
  std::vector<int> member_indices;  // into the hypothesis list given to cluster_groups
  std::vector<Hypothesis> members;
};

/// Fraction of h_i's world positions outside the frustum of h_j's calibration.
double outlier_ratio(const Hypothesis & hi, const Hypothesis & hj, const Intrinsics & intr);

/// Fraction of h_i's world positions that, projected with h_j's calibration,
/// fall within k_px of some box of h_j's track.
double overlap_ratio(const Hypothesis & hi, const Hypothesis & hj, const Intrinsics & intr, double k_px);

/// trace(R_jᵀ R_i) / 3.
double rotational_similarity(const Mat3 & ri, const Mat3 & rj);

/// Distance from a pixel to a box rectangle; zero inside.
double distance_to_box(const PixelPoint & px, const BoundingBox & box);

SimilarityScores symmetric_scores(
  const Hypothesis & a, const Hypothesis & b, const Intrinsics & intr, double k_px);

SimilarityGraph similarity_graph(
  std::span<const Hypothesis> hyps, const Intrinsics & intr, const GroupingParams & gp);

/// Classic DBSCAN. Labels are cluster ids in discovery order, -1 for noise.
std::vector<int> dbscan(std::span<const Vec3> points, double eps, int min_pts);

std::vector<HypothesisGroup> cluster_groups(
  const SimilarityGraph & graph, std::span<const Hypothesis> hyps, const GroupingParams & gp);

}  // namespace roadcal

#endif  // ROADCAL__GROUPING_HPP_
