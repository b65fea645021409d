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

#include "roadcal/assignment.hpp"

#include <algorithm>
#include <limits>

#include "roadcal/errors.hpp"

namespace roadcal
{

namespace
{

// Shortest augmenting path Hungarian for rows <= cols. Index 0 of the
// potential and matching arrays is a sentinel; real rows and columns are
// 1-based internally.
std::vector<int> hungarian_rows_le_cols(const Eigen::MatrixXd & a)
{
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0);
  std::vector<int> way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) {
          continue;
        }
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (match[j] != 0) {
      row_to_col[match[j] - 1] = j - 1;
    }
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd & cost)
{
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) {
    return out;
  }
  if (!cost.allFinite()) {
    throw Error(ErrorCode::kInput, "assignment cost matrix has non-finite entries");
  }
  if (cost.rows() <= cost.cols()) {
    const auto row_to_col = hungarian_rows_le_cols(cost);
    for (int r = 0; r < static_cast<int>(row_to_col.size()); ++r) {
      out.emplace_back(r, row_to_col[r]);
    }
  } else {
    const Eigen::MatrixXd transposed = cost.transpose();
    const auto col_to_row = hungarian_rows_le_cols(transposed);
    for (int c = 0; c < static_cast<int>(col_to_row.size()); ++c) {
      out.emplace_back(col_to_row[c], c);
    }
    std::sort(out.begin(), out.end());
  }
  return out;
}

Assignment assign(const Eigen::MatrixXd & cost, double forbidden)
{
  Assignment pairs = solve_assignment(cost);
  std::erase_if(pairs, [&](const auto & p) { return cost(p.first, p.second) >= forbidden - 1e-12; });
  return pairs;
}

double assignment_cost(const Eigen::MatrixXd & cost, const Assignment & pairs)
{
  double total = 0.0;
  for (const auto & [r, c] : pairs) {
    total += cost(r, c);
  }
  return total;
}

}  // namespace roadcal
