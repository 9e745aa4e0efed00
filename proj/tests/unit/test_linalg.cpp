#include <gtest/gtest.h>

#include <cmath>

#include "halrp/error.hpp"
#include "halrp/linalg.hpp"
#include "halrp/random.hpp"
#include "oracles.hpp"

using namespace halrp;
using namespace halrp::linalg;

namespace {

Matrix diag2(double a, double b) { return Matrix(2, 2, {a, 0.0, 0.0, b}); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

void expect_orthonormal_columns(const Matrix& q, std::size_t cols) {
  for (std::size_t a = 0; a < cols; ++a)
    for (std::size_t b = 0; b < cols; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, a) * q(i, b);
      EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-8);
    }
}

}  // namespace

TEST(Svd, IdentityHasUnitSingularValues) {
  const auto f = svd(Matrix::identity(2));
  EXPECT_EQ(f.sigma, (Vector{1.0, 1.0}));
}

TEST(Svd, DiagonalIsSortedDescending) {
  const auto f = svd(diag2(3, 4));
  EXPECT_NEAR(f.sigma[0], 4.0, 1e-14);
  EXPECT_NEAR(f.sigma[1], 3.0, 1e-14);
}

TEST(Svd, SquaredSingularValuesAreGramEigenvalues) {
  Rng rng(11);
  const Matrix m = oracle::random_matrix(rng, 6, 4);
  const auto f = svd(m);
  Vector eig = oracle::eigenvalues(oracle::matmul(m.transposed(), m));
  std::sort(eig.begin(), eig.end(), std::greater<>());
  ASSERT_EQ(f.sigma.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(f.sigma[i] * f.sigma[i], eig[i], 1e-8);
}

TEST(Svd, MatchesIndependentSolverOnRandomShapes) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 1 + rng.index(20), 1 + rng.index(20));
    const auto f = svd(m);
    const Vector want = oracle::singular_values(m);
    ASSERT_EQ(f.sigma.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(f.sigma[i], want[i], 1e-10 * (1.0 + want[0]));
  }
}

TEST(Svd, FactorsAreOrthonormalAndReconstruct) {
  Rng rng(13);
  for (auto [r, c] : {std::pair{8, 5}, std::pair{5, 8}, std::pair{7, 7}, std::pair{1, 6}, std::pair{6, 1}}) {
    const Matrix m = oracle::random_matrix(rng, r, c);
    const auto f = svd(m);
    const std::size_t k = f.sigma.size();
    EXPECT_EQ(k, static_cast<std::size_t>(std::min(r, c)));
    expect_orthonormal_columns(f.u, k);
    expect_orthonormal_columns(f.v, k);
    EXPECT_LT(oracle::frobenius(m - reconstruct(f)), 1e-6 * oracle::frobenius(m));
    for (std::size_t i = 0; i + 1 < k; ++i) EXPECT_GE(f.sigma[i], f.sigma[i + 1]);
  }
}

TEST(Svd, RankDeficientInputStillHasOrthonormalU) {
  Rng rng(14);
  const Matrix m = oracle::matmul(oracle::random_matrix(rng, 7, 2), oracle::random_matrix(rng, 2, 5));
  const auto f = svd(m);
  EXPECT_EQ(numerical_rank(f), 2u);
  expect_orthonormal_columns(f.u, f.sigma.size());
  expect_orthonormal_columns(f.v, f.sigma.size());
}

TEST(Svd, SignConventionMakesFirstEntryNonnegative) {
  Rng rng(15);
  const Matrix m = oracle::random_matrix(rng, 6, 4);
  const auto f = svd(m);
  for (std::size_t c = 0; c < f.sigma.size(); ++c) {
    for (std::size_t i = 0; i < f.u.rows(); ++i) {
      if (std::abs(f.u(i, c)) > 1e-9) {
        EXPECT_GT(f.u(i, c), 0.0);
        break;
      }
    }
  }
}

TEST(Svd, IsDeterministic) {
  Rng rng(16);
  const Matrix m = oracle::random_matrix(rng, 9, 6);
  const auto a = svd(m), b = svd(m);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.sigma, b.sigma);
  EXPECT_EQ(a.v, b.v);
}

TEST(Svd, RowPermutationPermutesU) {
  Rng rng(17);
  const Matrix m = oracle::random_matrix(rng, 5, 3);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  Matrix pm(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) pm(i, j) = m(perm[i], j);
  const auto f = svd(m), g = svd(pm);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(f.sigma[i], g.sigma[i], 1e-12);
  for (std::size_t c = 0; c < 3; ++c) {
    // Columns agree up to the sign fixed by the convention.
    const double sign = (f.u(perm[0], c) * g.u(0, c) >= 0.0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(g.u(i, c), sign * f.u(perm[i], c), 1e-10);
  }
}

TEST(Svd, SweepCapRaisesNumericalError) {
  Rng rng(18);
  const Matrix m = oracle::random_matrix(rng, 12, 10);
  try {
    svd(m, SvdOptions{1, 1e-12});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.rows(), 12u);
    EXPECT_EQ(e.cols(), 10u);
  }
}

TEST(Truncate, FullRankIsLossless) {
  Rng rng(19);
  const Matrix m = oracle::random_matrix(rng, 6, 5);
  const auto f = svd(m);
  EXPECT_LT(max_abs_diff(reconstruct(truncate(f, 5)), m), 1e-6);
}

TEST(Truncate, ZeroRankIsTheZeroMatrix) {
  const auto f = svd(diag2(3, 4));
  const Matrix z = reconstruct(truncate(f, 0));
  ASSERT_EQ(z.rows(), 2u);
  ASSERT_EQ(z.cols(), 2u);
  for (double x : z.data()) EXPECT_EQ(x, 0.0);
}

TEST(Truncate, LeadingTripletOfDiagonal) {
  const Matrix r = reconstruct(truncate(svd(diag2(4, 3)), 1));
  EXPECT_NEAR(r(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(r(1, 0), 0.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 0.0, 1e-14);
}

TEST(Truncate, RankAboveCapacityIsRejected) { EXPECT_THROW(truncate(svd(diag2(1, 2)), 3), InvalidArgument); }

TEST(TruncationError, Examples) {
  EXPECT_NEAR(truncation_error(svd(Matrix::identity(2)), 1), 1.0, 1e-14);
  EXPECT_NEAR(truncation_error(svd(diag2(3, 4)), 1), 3.0, 1e-14);
}

TEST(TruncationError, MatchesDirectResidualNorm) {
  Rng rng(20);
  const Matrix m = oracle::random_matrix(rng, 5, 5);
  const auto f = svd(m);
  for (std::size_t k = 0; k <= 5; ++k) {
    const double direct = oracle::frobenius(m - reconstruct(truncate(f, k)));
    EXPECT_NEAR(truncation_error(f, k), direct, 1e-6 * oracle::frobenius(m));
  }
}

TEST(TruncationError, NonIncreasingAndZeroAtRank) {
  Rng rng(21);
  const Matrix m = oracle::matmul(oracle::random_matrix(rng, 8, 3), oracle::random_matrix(rng, 3, 6));
  const auto f = svd(m);
  for (std::size_t k = 1; k <= f.sigma.size(); ++k) EXPECT_LE(truncation_error(f, k), truncation_error(f, k - 1));
  EXPECT_EQ(truncation_error(f, numerical_rank(f)), 0.0);
}

TEST(EckartYoung, RandomRankKPairsNeverBeatTruncation) {
  Rng rng(22);
  const Matrix m = oracle::random_matrix(rng, 9, 7);
  const auto f = svd(m);
  for (std::size_t k = 1; k <= 7; ++k) {
    const double best = oracle::frobenius(m - reconstruct(truncate(f, k)));
    for (int t = 0; t < 100; ++t) {
      const Matrix guess = oracle::matmul(oracle::random_matrix(rng, 9, k), oracle::random_matrix(rng, k, 7));
      EXPECT_GE(oracle::frobenius(m - guess), best - 1e-12);
    }
  }
}

TEST(Frobenius, Examples) {
  EXPECT_EQ(frobenius_norm(Matrix(3, 2)), 0.0);
  EXPECT_EQ(frobenius_norm(Matrix(1, 2, {3.0, 4.0})), 5.0);
  Rng rng(23);
  const Matrix m = oracle::random_matrix(rng, 7, 9);
  EXPECT_NEAR(frobenius_norm(m), oracle::frobenius(m), 1e-12);
}

TEST(SymmetricEigenvalues, MatchIndependentSolver) {
  Rng rng(24);
  const Matrix a = oracle::random_matrix(rng, 6, 6);
  const Matrix s = a + a.transposed();
  const Vector got = symmetric_eigenvalues(s), want = oracle::eigenvalues(s);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
}
