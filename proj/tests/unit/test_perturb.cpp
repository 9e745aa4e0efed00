#include <gtest/gtest.h>

#include "halrp/error.hpp"
#include "halrp/perturb.hpp"
#include "halrp/random.hpp"
#include "oracles.hpp"

using namespace halrp;

namespace {

Matrix scaled(const Matrix& m, double c) { return c * m; }

double max_abs(const Matrix& m) {
  double x = 0.0;
  for (double v : m.data()) x = std::max(x, std::abs(v));
  return x;
}

double row_objective(const Matrix& f, const Matrix& b, std::size_t j, double r) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.cols(); ++i) s += (f(j, i) - r * b(j, i)) * (f(j, i) - r * b(j, i));
  return s;
}

}  // namespace

TEST(SolveR, IdenticalWeightsGiveOnes) {
  Rng rng(1);
  const Matrix b = oracle::random_matrix(rng, 4, 3);
  for (double r : solve_r(b, b)) EXPECT_NEAR(r, 1.0, 1e-15);
}

TEST(SolveR, ScaledWeightsGiveTheScale) {
  Rng rng(2);
  const Matrix b = oracle::random_matrix(rng, 4, 3);
  for (double r : solve_r(scaled(b, 2.0), b)) EXPECT_NEAR(r, 2.0, 1e-14);
}

TEST(SolveR, MatchesScalarMinimizer) {
  Rng rng(3);
  const Matrix f = oracle::random_matrix(rng, 4, 3), b = oracle::random_matrix(rng, 4, 3);
  const Vector r = solve_r(f, b);
  for (std::size_t j = 0; j < 4; ++j) {
    const double want = oracle::golden_min([&](double x) { return row_objective(f, b, j, x); }, -50.0, 50.0);
    EXPECT_NEAR(r[j], want, 1e-6);
  }
}

TEST(SolveR, ZeroBaseRowFallsBackToOne) {
  Matrix b(2, 3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) b(1, i) = 0.0;
  const Matrix f(2, 3, 5.0);
  const Vector r = solve_r(f, b);
  EXPECT_EQ(r[1], 1.0);
  const Vector s = solve_s(f, b, r);
  const Matrix resid = residual_b(f, b, r, s);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r[1] * b(1, i) * s[i] + resid(1, i), f(1, i), 1e-15);
}

TEST(SolveR, SinglePerturbationNeverHelps) {
  Rng rng(4);
  const Matrix f = oracle::random_matrix(rng, 6, 5), b = oracle::random_matrix(rng, 6, 5);
  const Vector r = solve_r(f, b);
  for (std::size_t j = 0; j < 6; ++j) {
    const double at = row_objective(f, b, j, r[j]);
    EXPECT_LE(at, row_objective(f, b, j, r[j] + 1e-3));
    EXPECT_LE(at, row_objective(f, b, j, r[j] - 1e-3));
  }
}

TEST(SolveS, ScalingAbsorbedByR) {
  Rng rng(5);
  const Matrix b = oracle::random_matrix(rng, 4, 3);
  const Vector r(4, 1.7);
  for (double s : solve_s(scaled(b, 1.7), b, r)) EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(SolveS, ColumnScaleRecovered) {
  Rng rng(6);
  const Matrix b = oracle::random_matrix(rng, 4, 3);
  const Vector ones(4, 1.0);
  Matrix f = b;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 3; ++i) f(j, i) *= 3.0;
  for (double s : solve_s(f, b, ones)) EXPECT_NEAR(s, 3.0, 1e-14);
}

TEST(SolveS, MatchesScalarMinimizer) {
  Rng rng(7);
  const Matrix f = oracle::random_matrix(rng, 5, 4), b = oracle::random_matrix(rng, 5, 4);
  const Vector r = solve_r(f, b);
  const Vector s = solve_s(f, b, r);
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> a, c;
    for (std::size_t j = 0; j < 5; ++j) {
      a.push_back(f(j, i));
      c.push_back(r[j] * b(j, i));
    }
    EXPECT_NEAR(s[i], oracle::scale_lse(a, c), 1e-6);
  }
}

TEST(ResidualB, Examples) {
  Rng rng(8);
  const Matrix b = oracle::random_matrix(rng, 4, 3);
  const Vector ones4(4, 1.0), ones3(3, 1.0);
  EXPECT_EQ(max_abs(residual_b(b, b, ones4, ones3)), 0.0);
  const Matrix f = scaled(b, -2.5);
  const Vector r = solve_r(f, b);
  EXPECT_LT(max_abs(residual_b(f, b, r, solve_s(f, b, r))), 1e-14);
}

TEST(ResidualB, ReconstructionIdentity) {
  Rng rng(9);
  const Matrix f = oracle::random_matrix(rng, 7, 6), b = oracle::random_matrix(rng, 7, 6);
  const Vector r = solve_r(f, b);
  const Vector s = solve_s(f, b, r);
  const Matrix resid = residual_b(f, b, r, s);
  for (std::size_t j = 0; j < 7; ++j)
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r[j] * b(j, i) * s[i] + resid(j, i), f(j, i), 1e-12);
}

TEST(DecomposeFc, IdenticalWeightsHaveZeroSpectrum) {
  Rng rng(10);
  const Matrix b = oracle::random_matrix(rng, 5, 4);
  for (double s : decompose_fc(b, b).factors.sigma) EXPECT_EQ(s, 0.0);
}

TEST(DecomposeFc, RankOneUpdateIsCapturedByOneComponent) {
  // Symmetric construction: a zero-mean update orthogonal to every base row
  // and column keeps r = s = 1.
  Matrix base(4, 4, 1.0);
  const Vector u = {1.0, -1.0, 1.0, -1.0}, v = {1.0, 1.0, -1.0, -1.0};
  Matrix f = base;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) f(j, i) += 0.5 * u[j] * v[i];
  const Decomposition d = decompose_fc(f, base);
  for (double x : d.r) EXPECT_NEAR(x, 1.0, 1e-14);
  for (double x : d.s) EXPECT_NEAR(x, 1.0, 1e-14);
  EXPECT_LT(linalg::truncation_error(d.factors, 1), 0.05 * linalg::truncation_error(d.factors, 0));
}

TEST(DecomposeFc, FullRankReconstructsFreeWeights) {
  Rng rng(11);
  const Matrix f = oracle::random_matrix(rng, 6, 4), b = oracle::random_matrix(rng, 6, 4);
  const Decomposition d = decompose_fc(f, b);
  const TaskLayerParams p = init_layer_params(d, 4, 0);
  EXPECT_LT(oracle::frobenius(reconstruct_weights(b, p) - f), 1e-8 * oracle::frobenius(f));
}

TEST(DecomposeFc, ShapeMismatchIsRejected) { EXPECT_THROW(decompose_fc(Matrix(2, 3), Matrix(3, 2)), ShapeError); }

TEST(DecomposeConv, UnitKernelMatchesDense) {
  Rng rng(12);
  const Matrix f = oracle::random_matrix(rng, 5, 3), b = oracle::random_matrix(rng, 5, 3);
  const Decomposition dc = decompose_conv(Tensor4::from_matrix(f), Tensor4::from_matrix(b));
  const Decomposition df = decompose_fc(f, b);
  EXPECT_EQ(dc.r, df.r);
  EXPECT_EQ(dc.s, df.s);
  EXPECT_EQ(dc.residual, df.residual);
  EXPECT_EQ(dc.factors.sigma, df.factors.sigma);
}

TEST(DecomposeConv, IdenticalKernelsGiveIdentityScales) {
  Rng rng(13);
  const Tensor4 b = oracle::random_tensor(rng, 4, 2, 3);
  const Decomposition d = decompose_conv(b, b);
  for (double x : d.r) EXPECT_NEAR(x, 1.0, 1e-15);
  for (double x : d.s) EXPECT_NEAR(x, 1.0, 1e-15);
  EXPECT_EQ(max_abs(d.residual), 0.0);
}

TEST(DecomposeConv, ChannelScalesMatchScalarMinimizer) {
  Rng rng(14);
  const Tensor4 f = oracle::random_tensor(rng, 4, 2, 3), b = oracle::random_tensor(rng, 4, 2, 3);
  const Decomposition d = decompose_conv(f, b);
  for (std::size_t j = 0; j < 4; ++j) {
    auto q = [&](double x) {
      double s = 0.0;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t pq = 0; pq < 9; ++pq) s += std::pow(f.at(j, i, pq) - x * b.at(j, i, pq), 2);
      return s;
    };
    EXPECT_NEAR(d.r[j], oracle::golden_min(q, -50.0, 50.0), 1e-6);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> a, c;
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t pq = 0; pq < 9; ++pq) {
        a.push_back(f.at(j, i, pq));
        c.push_back(d.r[j] * b.at(j, i, pq));
      }
    EXPECT_NEAR(d.s[i], oracle::scale_lse(a, c), 1e-6);
  }
}

TEST(DecomposeConv, ResidualIsTheSpatialMean) {
  Rng rng(15);
  const Tensor4 f = oracle::random_tensor(rng, 3, 2, 2), b = oracle::random_tensor(rng, 3, 2, 2);
  const Decomposition d = decompose_conv(f, b);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 2; ++i) {
      double mean = 0.0;
      for (std::size_t pq = 0; pq < 4; ++pq) mean += f.at(j, i, pq) - d.r[j] * b.at(j, i, pq) * d.s[i];
      EXPECT_NEAR(d.residual(j, i), mean / 4.0, 1e-14);
    }
}

TEST(ReconstructWeights, ZeroRankIsScaledBase) {
  Rng rng(16);
  const Matrix f = oracle::random_matrix(rng, 4, 3), b = oracle::random_matrix(rng, 4, 3);
  const Decomposition d = decompose_fc(f, b);
  const Matrix w = reconstruct_weights(b, init_layer_params(d, 0, 0));
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(w(j, i), d.r[j] * b(j, i) * d.s[i], 1e-15);
}

TEST(ReconstructWeights, GapEqualsTruncationError) {
  Rng rng(17);
  const Matrix f = oracle::random_matrix(rng, 7, 5), b = oracle::random_matrix(rng, 7, 5);
  const Decomposition d = decompose_fc(f, b);
  for (std::size_t k = 0; k <= 5; ++k) {
    const double gap = oracle::frobenius(f - reconstruct_weights(b, init_layer_params(d, k, 0)));
    EXPECT_NEAR(gap, linalg::truncation_error(d.factors, k), 1e-10);
  }
}

TEST(ReconstructWeights, ConvBroadcastsLowRankTerm) {
  Rng rng(18);
  const Tensor4 f = oracle::random_tensor(rng, 3, 2, 3), b = oracle::random_tensor(rng, 3, 2, 3);
  const Decomposition d = decompose_conv(f, b);
  const TaskLayerParams p = init_layer_params(d, 2, 0);
  const Tensor4 w = reconstruct_weights(b, p);
  const Matrix lr = low_rank_term(p);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t pq = 0; pq < 9; ++pq)
        EXPECT_NEAR(w.at(j, i, pq), p.r[j] * b.at(j, i, pq) * p.s[i] + lr(j, i), 1e-14);
}

TEST(ParamCount, Examples) {
  EXPECT_EQ(param_count(3, 4, 2), 23u);
  EXPECT_DOUBLE_EQ(increment_ratio(3, 4, 2), 23.0 / 12.0);
  EXPECT_EQ(param_count(3, 4, 0), 7u);
  EXPECT_DOUBLE_EQ(increment_ratio(800, 500, 10), 0.035775);
  EXPECT_THROW(param_count(3, 4, 4), InvalidArgument);
}
