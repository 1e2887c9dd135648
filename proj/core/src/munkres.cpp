// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "hsrdm/core_math.hpp"
#include "hsrdm/error.hpp"

namespace hsrdm {

// Hungarian algorithm with potentials, O(n^3), minimizing max(C) - C.
std::vector<int> munkres_align(const Eigen::Ref<const Eigen::MatrixXd>& confusion) {
  if (confusion.rows() != confusion.cols()) throw Error("NonSquareConfusion");
  const int n = static_cast<int>(confusion.rows());
  if (n == 0) return {};
  const double top = confusion.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based arrays; row 0 / column 0 are sentinels.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cost = top - confusion(i0 - 1, j - 1);
        const double cur = cost - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
  std::vector<int> perm(n, 0);
  for (int j = 1; j <= n; ++j) perm[match[j] - 1] = j - 1;
  return perm;
}

}  // namespace hsrdm
