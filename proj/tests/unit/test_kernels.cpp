#include <gtest/gtest.h>

#include <omp.h>

#include "halrp/error.hpp"
#include "halrp/kernels.hpp"
#include "halrp/random.hpp"
#include "oracles.hpp"

using namespace halrp;
using kernels::Trans;

namespace {

Matrix transpose_if(const Matrix& m, Trans t) { return t == Trans::Yes ? m.transposed() : m; }

}  // namespace

TEST(Gemm, MatchesNaiveProductForEveryTransposeCombination) {
  Rng rng(1);
  for (Trans ta : {Trans::No, Trans::Yes})
    for (Trans tb : {Trans::No, Trans::Yes}) {
      const Matrix a = oracle::random_matrix(rng, 7, 5), b = oracle::random_matrix(rng, 5, 9);
      const Matrix sa = transpose_if(a, ta), sb = transpose_if(b, tb);
      const Matrix got = kernels::gemm(sa, ta, sb, tb);
      const Matrix want = oracle::matmul(a, b);
      ASSERT_EQ(got.rows(), 7u);
      ASSERT_EQ(got.cols(), 9u);
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
    }
}

TEST(Gemm, ParallelAndSerialAreBitIdentical) {
  Rng rng(2);
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    for (Trans ta : {Trans::No, Trans::Yes})
      for (Trans tb : {Trans::No, Trans::Yes}) {
        const Matrix a = oracle::random_matrix(rng, 70, 90), b = oracle::random_matrix(rng, 90, 60);
        const Matrix sa = transpose_if(a, ta), sb = transpose_if(b, tb);
        EXPECT_EQ(kernels::gemm(sa, ta, sb, tb), kernels::serial::gemm(sa, ta, sb, tb));
      }
  }
}

TEST(Gemm, RejectsMismatchedInnerDimension) {
  EXPECT_THROW(kernels::gemm(Matrix(2, 3), Trans::No, Matrix(2, 3), Trans::No), ShapeError);
}

TEST(Im2col, ParallelAndSerialAreBitIdentical) {
  Rng rng(3);
  const kernels::ConvGeometry g{3, 9, 8, 3, 2, 1};
  const Matrix x = oracle::random_matrix(rng, 20, g.input_size());
  omp_set_num_threads(4);
  EXPECT_EQ(kernels::im2col(x, g), kernels::serial::im2col(x, g));
  const Matrix cols = oracle::random_matrix(rng, 20 * g.positions(), g.patch());
  EXPECT_EQ(kernels::col2im(cols, 20, g), kernels::serial::col2im(cols, 20, g));
}

TEST(Im2col, Col2imIsTheAdjoint) {
  Rng rng(4);
  const kernels::ConvGeometry g{2, 6, 7, 3, 1, 1};
  const Matrix x = oracle::random_matrix(rng, 3, g.input_size());
  const Matrix c = oracle::random_matrix(rng, 3 * g.positions(), g.patch());
  const double lhs = dot(kernels::im2col(x, g).data(), c.data());
  const double rhs = dot(x.data(), kernels::col2im(c, 3, g).data());
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs) + 1e-12);
}

TEST(Im2col, PatchesHoldZeroPadding) {
  const kernels::ConvGeometry g{1, 2, 2, 3, 1, 1};
  Matrix x(1, 4);
  for (std::size_t i = 0; i < 4; ++i) x(0, i) = static_cast<double>(i + 1);
  const Matrix cols = kernels::im2col(x, g);
  ASSERT_EQ(cols.rows(), 4u);
  ASSERT_EQ(cols.cols(), 9u);
  // Output position (0,0): window rows -1..1, cols -1..1.
  const std::vector<double> want = {0, 0, 0, 0, 1, 2, 0, 3, 4};
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(cols(0, i), want[i]);
}
