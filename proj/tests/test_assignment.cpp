#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bevtraj/assignment.hpp"

using namespace bevtraj;

namespace {

struct Best {
  int pairs = -1;
  double cost = 0.0;
};

// Enumerate every injection of the smaller side into the larger one.
Best brute_force(const CostMatrix& c) {
  const bool transpose = c.rows > c.cols;
  const int n = transpose ? c.cols : c.rows, m = transpose ? c.rows : c.cols;
  auto at = [&](int i, int j) { return transpose ? c(j, i) : c(i, j); };
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  Best best;
  do {
    int pairs = 0;
    double cost = 0;
    for (int i = 0; i < n; ++i)
      if (std::isfinite(at(i, perm[i]))) {
        ++pairs;
        cost += at(i, perm[i]);
      }
    if (pairs > best.pairs || (pairs == best.pairs && cost < best.cost - 1e-12)) best = {pairs, cost};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(Assignment, EmptyMatrices) {
  const auto a = solve_assignment(CostMatrix(0, 3));
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.unmatched_cols, (std::vector<int>{0, 1, 2}));
  const auto b = solve_assignment(CostMatrix(2, 0));
  EXPECT_EQ(b.unmatched_rows, (std::vector<int>{0, 1}));
}

TEST(Assignment, OptimalNotGreedy) {
  CostMatrix c(2, 2);
  c(0, 0) = 1.0;
  c(0, 1) = 1.1;
  c(1, 0) = 1.1;
  c(1, 1) = 5.0;
  const auto a = solve_assignment(c);
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0], std::make_pair(0, 1));
  EXPECT_EQ(a.pairs[1], std::make_pair(1, 0));
  EXPECT_NEAR(a.total_cost, 2.2, 1e-12);
}

TEST(Assignment, CardinalityBeforeCost) {
  CostMatrix c(2, 2);
  c(0, 0) = 0.1;
  c(0, 1) = 10.0;
  c(1, 0) = 10.0;
  // (1, 1) infeasible: the cheap pair (0, 0) would leave row 1 unmatched.
  const auto a = solve_assignment(c);
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0], std::make_pair(0, 1));
}

TEST(Assignment, InfeasibleNeverPaired) {
  CostMatrix c(3, 2);
  c(2, 1) = 0.4;
  const auto a = solve_assignment(c);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], std::make_pair(2, 1));
  EXPECT_EQ(a.unmatched_rows, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.unmatched_cols, (std::vector<int>{0}));
}

TEST(Assignment, MatchesBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> u(0, 3);
  std::bernoulli_distribution infeasible(0.3);
  for (int trial = 0; trial < 2000; ++trial) {
    CostMatrix c(dim(rng), dim(rng));
    for (auto& v : c.values) v = infeasible(rng) ? CostMatrix::infeasible() : u(rng);
    const auto a = solve_assignment(c);
    const Best b = brute_force(c);
    ASSERT_EQ(static_cast<int>(a.pairs.size()), b.pairs) << "trial " << trial;
    ASSERT_NEAR(a.total_cost, b.cost, 1e-9) << "trial " << trial;
    EXPECT_EQ(a.pairs.size() + a.unmatched_rows.size(), static_cast<std::size_t>(c.rows));
    EXPECT_EQ(a.pairs.size() + a.unmatched_cols.size(), static_cast<std::size_t>(c.cols));
    EXPECT_TRUE(std::is_sorted(a.pairs.begin(), a.pairs.end()));
  }
}

TEST(Assignment, Deterministic) {
  CostMatrix c(3, 3);
  for (auto& v : c.values) v = 1.0;  // all ties
  const auto a = solve_assignment(c), b = solve_assignment(c);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.pairs.size(), 3u);
}
