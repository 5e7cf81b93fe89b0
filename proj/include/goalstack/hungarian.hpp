// Copyright 2026 The goalstack Authors
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

#ifndef GOALSTACK__HUNGARIAN_HPP_
#define GOALSTACK__HUNGARIAN_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "goalstack/common.hpp"

namespace goalstack
{

/// (row, col) pairs sorted by row.
using Assignment = std::vector<std::pair<int, int>>;

/// Minimum-cost one-to-one assignment of size min(n, m), O(n^2 m) shortest
/// augmenting paths with row/column potentials.
inline Assignment hungarian(const Eigen::MatrixXd & cost)
{
  require(cost.allFinite(), "tracker", "hungarian", "costs must be finite");
  const bool transposed = cost.rows() > cost.cols();
  const Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  Assignment out;
  if (n == 0) {
    return out;
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
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
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) {
      out.emplace_back(
        transposed ? j - 1 : p[j] - 1, transposed ? p[j] - 1 : j - 1);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double assignment_cost(const Eigen::MatrixXd & cost, const Assignment & a)
{
  double s = 0.0;
  for (const auto & [r, c] : a) {
    s += cost(r, c);
  }
  return s;
}

}  // namespace goalstack

#endif  // GOALSTACK__HUNGARIAN_HPP_
