#include "lily/error.hpp"
#include "lily/numerics/assignment.hpp"
#include "lily/numerics/finite_diff.hpp"
#include "lily/numerics/rank.hpp"
#include "lily/numerics/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lily {
namespace {

double brute_force_min(const Matrix& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, assignment_cost(cost, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

TEST(Rank, ZeroSecondColumn) {
  Matrix m(2, 2);
  m << 1, 0, 2, 0;
  EXPECT_EQ(rank_with_tolerance(m, 1e-8).numeric_rank, 1);
}

TEST(Rank, IdentityHasFullRankAndUnitRatio) {
  const RankReport r = rank_with_tolerance(Matrix::Identity(3, 3), 1e-8);
  EXPECT_EQ(r.numeric_rank, 3);
  EXPECT_DOUBLE_EQ(r.ratio, 1.0);
}

TEST(Rank, NearlyDuplicateRowsAgainstClosedForm) {
  Matrix m(2, 2);
  m << 1, 1, 1, 1 + 1e-12;
  // 2x2 closed form: s1 s2 = |det|, s1^2 + s2^2 = ||m||_F^2.
  const double det = std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
  const double fro2 = m.squaredNorm();
  const double s1 = std::sqrt(0.5 * (fro2 + std::sqrt(fro2 * fro2 - 4 * det * det)));
  const double s2 = det / s1;
  ASSERT_LT(s2 / s1, 1e-8);
  const RankReport r = rank_with_tolerance(m, 1e-8);
  EXPECT_EQ(r.numeric_rank, 1);
  EXPECT_NEAR(r.singular_values[0], s1, 1e-12);
}

TEST(Rank, EmptyMatrixIsRejected) { EXPECT_THROW(rank_with_tolerance(Matrix(0, 0), 1e-6), InvalidInput); }

TEST(Rank, SingularValuesSortedAndNonNegative) {
  Rng rng(3);
  const RankReport r = rank_with_tolerance(random_matrix(4, 7, rng), 1e-6);
  for (std::size_t i = 0; i < r.singular_values.size(); ++i) {
    EXPECT_GE(r.singular_values[i], 0.0);
    if (i > 0) EXPECT_LE(r.singular_values[i], r.singular_values[i - 1]);
  }
  EXPECT_LE(r.numeric_rank, 4);
}

TEST(Rank, InvariantUnderRowPermutationAndScaling) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    // rank-3 product padded to 5 rows
    const Matrix m = random_matrix(5, 3, rng) * random_matrix(3, 9, rng);
    const int base = rank_with_tolerance(m, 1e-6).numeric_rank;
    Matrix p = m;
    p.row(0).swap(p.row(4));
    p.row(1) *= -250.0;
    p.row(3) *= 1e-3;
    EXPECT_EQ(rank_with_tolerance(p, 1e-6).numeric_rank, base);
    EXPECT_EQ(base, 3);
  }
}

TEST(Assignment, TwoByTwo) {
  Matrix c(2, 2);
  c << 1, 2, 3, 1;
  const auto perm = solve_assignment(c);
  EXPECT_EQ(perm, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(assignment_cost(c, perm), 2.0);
}

TEST(Assignment, ZeroDiagonalGivesIdentity) {
  const Matrix c = Matrix::Ones(5, 5) - Matrix::Identity(5, 5);
  EXPECT_EQ(solve_assignment(c), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Assignment, NonSquareIsRejected) { EXPECT_THROW(solve_assignment(Matrix::Zero(2, 3)), InvalidInput); }

TEST(Assignment, MatchesExhaustiveSearchUpToSix) {
  Rng rng(2024);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      Matrix c(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = trial % 2 == 0 ? rng.uniform() : std::floor(rng.uniform(0, 4));
      const auto perm = solve_assignment(c);
      std::vector<int> sorted = perm;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < n; ++i) ASSERT_EQ(sorted[static_cast<std::size_t>(i)], i);
      EXPECT_NEAR(assignment_cost(c, perm), brute_force_min(c), 1e-12) << "n=" << n;
    }
  }
}

TEST(FiniteDiff, Square) {
  const Vector g = finite_diff_grad([](const Vector& x) { return x[0] * x[0]; }, Vector::Constant(1, 3.0), 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-5);
}

TEST(FiniteDiff, ConstantGivesZero) {
  const Vector g = finite_diff_grad([](const Vector&) { return 4.2; }, Vector::Ones(4), 1e-5);
  EXPECT_EQ(g, Vector::Zero(4));
}

TEST(FiniteDiff, SineAtZero) {
  const Vector g = finite_diff_grad([](const Vector& x) { return std::sin(x[0]); }, Vector::Zero(1), 1e-5);
  EXPECT_NEAR(g[0], 1.0, 1e-8);
}

TEST(FiniteDiff, QuadraticForm) {
  Rng rng(7);
  const int n = 6;
  const Matrix a = random_matrix(n, n, rng);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.normal();
  const Vector g = finite_diff_grad([&](const Vector& v) { return 0.5 * v.dot(a * v); }, x, 1e-5);
  const Vector expected = 0.5 * (a + a.transpose()) * x;
  EXPECT_LT((g - expected).norm() / expected.norm(), 1e-6);
}

TEST(FiniteDiff, NonFiniteEvaluationPropagates) {
  EXPECT_THROW(finite_diff_grad([](const Vector& x) { return std::log(x[0]); }, Vector::Zero(1), 1e-5),
               NumericDomain);
}

TEST(Rng, SameSeedSameSequence) {
  Rng a = seeded_rng(42);
  Rng b = seeded_rng(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(0);
  Rng b(1);
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, NormalMeanWithinCltBound) {
  Rng rng(5);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.normal();
  EXPECT_LT(std::abs(sum / n), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Rng, DerivedStreamsAreStable) {
  const Rng root(9);
  Rng a = root.derive({2, 5});
  Rng b = root.derive({2, 5});
  Rng c = root.derive({2, 6});
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(a.next_u64(), c.next_u64());
}

}  // namespace
}  // namespace lily
