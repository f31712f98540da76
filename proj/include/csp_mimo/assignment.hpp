#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

namespace csp {

// Minimum-cost assignment (Hungarian / Kuhn-Munkres, O(n^2 m)) for an
// n x m cost matrix with n <= m, given row-major. Returns, for each row, the
// assigned column.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<double>& cost, std::size_t n,
                                                    std::size_t m) {
  if (n > m) throw std::invalid_argument("min_cost_assignment: need rows <= cols");
  if (cost.size() != n * m) throw std::invalid_argument("min_cost_assignment: cost size mismatch");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials with a dummy column 0.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace csp
