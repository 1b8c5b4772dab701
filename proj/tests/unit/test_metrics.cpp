#include "lily/error.hpp"
#include "lily/metrics/mcc.hpp"
#include "lily/numerics/assignment.hpp"
#include "lily/numerics/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace lily::metrics {
namespace {

Matrix normals(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

double brute_force_mcc(const Matrix& corr) {
  std::vector<int> perm(static_cast<std::size_t>(corr.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += corr(static_cast<Eigen::Index>(i), perm[i]);
    best = std::max(best, s / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TEST(Mcc, IdenticalIsOne) {
  Rng rng(1);
  const Matrix z = normals(500, 5, rng);
  EXPECT_NEAR(mcc(z, z).mcc, 1.0, 1e-12);
}

TEST(Mcc, PermutationSignAndScaleInvariance) {
  Rng rng(2);
  const Matrix z = normals(1000, 6, rng);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Matrix est(z.rows(), z.cols());
  for (int j = 0; j < 6; ++j) est.col(perm[static_cast<std::size_t>(j)]) = (j % 2 ? -1.0 : 1.0) * (j + 0.5) * z.col(j);
  const MccReport r = mcc(z, est);
  EXPECT_NEAR(r.mcc, 1.0, 1e-12);
  EXPECT_EQ(r.assignment, perm);
}

TEST(Mcc, SpearmanSeesThroughMonotoneMaps) {
  Rng rng(3);
  const Matrix z = normals(800, 4, rng);
  const Matrix cubed = z.array().cube().matrix();
  EXPECT_NEAR(mcc(z, cubed, CorrelationMethod::kSpearman).mcc, 1.0, 1e-12);
  EXPECT_LT(mcc(z, cubed).mcc, 0.99);
}

TEST(Mcc, AssignmentMatchesBruteForce) {
  Rng rng(4);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix a = normals(200, n, rng);
      const Matrix b = a * normals(n, n, rng) + 0.5 * normals(200, n, rng);
      const MccReport r = mcc(a, b);
      EXPECT_NEAR(r.mcc, brute_force_mcc(r.corr_matrix), 1e-12);
    }
  }
}

TEST(Mcc, NullDistributionIsSmall) {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    worst = std::max(worst, mcc(normals(10000, 8, rng), normals(10000, 8, rng)).mcc);
  }
  EXPECT_LT(worst, 0.1);
}

TEST(Mcc, ExtraEstimatedComponentsSelectBestSubset) {
  Rng rng(6);
  const Matrix z = normals(400, 3, rng);
  Matrix est(400, 5);
  est << normals(400, 1, rng), z.col(2), z.col(0), normals(400, 1, rng), z.col(1);
  const MccReport r = mcc(z, est);
  EXPECT_NEAR(r.mcc, 1.0, 1e-12);
  EXPECT_EQ(r.assignment, (std::vector<int>{2, 4, 1}));
}

TEST(Mcc, ZeroVarianceColumnIsFlagged) {
  Rng rng(7);
  const Matrix z = normals(100, 2, rng);
  Matrix est = z;
  est.col(1).setConstant(3.0);
  const MccReport r = mcc(z, est);
  EXPECT_TRUE(r.zero_variance);
  EXPECT_EQ(r.corr_matrix(1, 1), 0.0);
}

TEST(Mcc, PreconditionsAreEnforced) {
  EXPECT_THROW(mcc(Matrix::Zero(2, 2), Matrix::Zero(2, 2)), InvalidInput);
  EXPECT_THROW(mcc(Matrix::Ones(10, 3), Matrix::Ones(10, 2)), InvalidInput);
  Matrix bad = Matrix::Ones(10, 2);
  bad(3, 1) = std::nan("");
  EXPECT_THROW(mcc(Matrix::Ones(10, 2), bad), InvalidInput);
  EXPECT_THROW(method_from_string("kendall"), InvalidInput);
}

TEST(Ranks, TiesShareTheMeanRank) {
  Vector v(5);
  v << 3, 1, 3, 2, 5;
  Vector expected(5);
  expected << 3.5, 1, 3.5, 2, 5;
  EXPECT_EQ(ranks(v), expected);
}

TEST(Mcc, JsonCarriesReportFields) {
  Rng rng(8);
  const Matrix z = normals(50, 2, rng);
  const std::string j = report_to_json(mcc(z, z));
  for (const char* key : {"\"mcc\"", "\"method\"", "\"assignment\"", "\"corr_matrix\"", "\"zero_variance\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
}

}  // namespace
}  // namespace lily::metrics
