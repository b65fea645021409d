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

#ifndef ROADCAL__ASSIGNMENT_HPP_
#define ROADCAL__ASSIGNMENT_HPP_

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace roadcal
{

using Assignment = std::vector<std::pair<int, int>>;

/// Minimum-total-cost one-to-one assignment of a rectangular cost matrix
/// (Hungarian method with row/column potentials, O(n^2 m)). Exactly
/// min(rows, cols) pairs are returned, sorted by row. Ties resolve to the
/// lowest row index first, then the lowest column index.
Assignment solve_assignment(const Eigen::MatrixXd & cost);

/// Solves the assignment and strips every pair whose cost is at or above
/// `forbidden` (within 1e-12).
Assignment assign(const Eigen::MatrixXd & cost, double forbidden = 2.0);

double assignment_cost(const Eigen::MatrixXd & cost, const Assignment & pairs);

}  // namespace roadcal

#endif  // ROADCAL__ASSIGNMENT_HPP_
