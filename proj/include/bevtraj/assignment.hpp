#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace bevtraj {

/// Dense cost matrix; +infinity marks an infeasible pair.
struct CostMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  CostMatrix() = default;
  CostMatrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, infeasible()) {}

  static constexpr double infeasible() { return std::numeric_limits<double>::infinity(); }
  double& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  bool feasible(int r, int c) const { return std::isfinite((*this)(r, c)); }
};

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

/// Sum of pair costs in row order.
inline double assignment_cost(const CostMatrix& cost, const std::vector<std::pair<int, int>>& pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

namespace detail {

// Shortest augmenting path Hungarian method for an n x m matrix with n <= m.
// Returns, for each row, its assigned column.
inline std::vector<int> hungarian(const std::vector<double>& a, int n, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[static_cast<std::size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
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
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Among matchings with the largest number of feasible pairs, returns one of
/// minimum total cost.
inline Assignment solve_assignment(const CostMatrix& cost) {
  Assignment result;
  const bool transpose = cost.rows > cost.cols;
  const int n = transpose ? cost.cols : cost.rows;
  const int m = transpose ? cost.rows : cost.cols;

  if (n > 0) {
    double feasible_sum = 0.0;
    for (double c : cost.values)
      if (std::isfinite(c)) feasible_sum += std::abs(c);
    // Larger than any difference in feasible cost, so cardinality dominates.
    const double big = 2.0 * feasible_sum + 1.0;
    std::vector<double> a(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const double c = transpose ? cost(j, i) : cost(i, j);
        a[static_cast<std::size_t>(i) * m + j] = std::isfinite(c) ? c : big;
      }
    const auto assigned = detail::hungarian(a, n, m);
    for (int i = 0; i < n; ++i) {
      const int j = assigned[i];
      const int r = transpose ? j : i;
      const int c = transpose ? i : j;
      if (j >= 0 && cost.feasible(r, c)) result.pairs.emplace_back(r, c);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  std::vector<char> row_used(cost.rows, 0), col_used(cost.cols, 0);
  for (const auto& [r, c] : result.pairs) {
    row_used[r] = 1;
    col_used[c] = 1;
  }
  for (int r = 0; r < cost.rows; ++r)
    if (!row_used[r]) result.unmatched_rows.push_back(r);
  for (int c = 0; c < cost.cols; ++c)
    if (!col_used[c]) result.unmatched_cols.push_back(c);
  result.total_cost = assignment_cost(cost, result.pairs);
  return result;
}

}  // namespace bevtraj
