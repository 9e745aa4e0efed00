#include <gtest/gtest.h>

#include "halrp/error.hpp"
#include "halrp/metrics.hpp"
#include "halrp/random.hpp"

using namespace halrp;

namespace {

AccuracyMatrix random_matrix(Rng& rng, std::size_t t) {
  AccuracyMatrix a(t);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j <= i; ++j) a.set(i, j, rng.uniform());
  return a;
}

}  // namespace

TEST(FinalAvgAccuracy, Examples) {
  AccuracyMatrix ones(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j <= i; ++j) ones.set(i, j, 1.0);
  EXPECT_EQ(final_avg_accuracy(ones), 1.0);
  AccuracyMatrix a(2);
  a.set(0, 0, 0.9);
  a.set(1, 0, 0.5);
  a.set(1, 1, 0.7);
  EXPECT_DOUBLE_EQ(final_avg_accuracy(a), 0.6);
}

TEST(FinalAvgAccuracy, MatchesLoopOracle) {
  Rng rng(1);
  const auto a = random_matrix(rng, 6);
  double s = 0.0;
  for (std::size_t j = 0; j < 6; ++j) s += a.at(5, j);
  EXPECT_NEAR(final_avg_accuracy(a), s / 6.0, 1e-15);
}

TEST(Bwt, Examples) {
  AccuracyMatrix a(2);
  a.set(0, 0, 0.9);
  a.set(1, 0, 0.8);
  a.set(1, 1, 0.7);
  EXPECT_NEAR(bwt(a), -0.1, 1e-15);
  AccuracyMatrix one(1);
  one.set(0, 0, 0.4);
  EXPECT_EQ(bwt(one), 0.0);
  AccuracyMatrix flat(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j <= i; ++j) flat.set(i, j, 0.1 * static_cast<double>(j + 1));
  EXPECT_EQ(bwt(flat), 0.0);
}

TEST(Bwt, MatchesLoopOracle) {
  Rng rng(2);
  const auto a = random_matrix(rng, 7);
  double s = 0.0;
  for (std::size_t j = 0; j < 6; ++j) s += a.at(6, j) - a.at(j, j);
  EXPECT_NEAR(bwt(a), s / 6.0, 1e-15);
}

TEST(AccuracyMatrix, DefinedEntriesOnly) {
  AccuracyMatrix a(3);
  a.set(1, 0, 0.5);
  EXPECT_TRUE(a.defined(1, 0));
  EXPECT_FALSE(a.defined(0, 0));
  EXPECT_THROW(a.set(0, 1, 0.5), InvalidArgument);
  EXPECT_THROW(a.set(1, 1, 1.5), InvalidArgument);
  EXPECT_THROW(a.at(2, 2), InvalidArgument);
}

TEST(Opd, Examples) {
  OrderRunSet one{{{{0, 0.8}, {1, 0.6}}}};
  for (const auto& [t, v] : opd(one)) EXPECT_EQ(v, 0.0);
  OrderRunSet two{{{{0, 0.8}}, {{0, 0.9}}}};
  EXPECT_NEAR(opd(two).at(0), 0.1, 1e-15);
  OrderRunSet bad{{{{0, 0.8}}, {{1, 0.9}}}};
  EXPECT_THROW(opd(bad), InvalidArgument);
}

TEST(Opd, MatchesLoopOracleAndIgnoresRunOrder) {
  Rng rng(3);
  OrderRunSet runs;
  for (int r = 0; r < 4; ++r) {
    std::map<int, double> m;
    for (int t = 0; t < 5; ++t) m[t] = rng.uniform();
    runs.runs.push_back(m);
  }
  const auto got = opd(runs);
  for (int t = 0; t < 5; ++t) {
    double lo = 1.0, hi = 0.0;
    for (const auto& run : runs.runs) {
      lo = std::min(lo, run.at(t));
      hi = std::max(hi, run.at(t));
    }
    EXPECT_NEAR(got.at(t), hi - lo, 1e-15);
  }
  std::reverse(runs.runs.begin(), runs.runs.end());
  EXPECT_EQ(opd(runs), got);
}

TEST(MopdAopd, Examples) {
  const auto z = mopd_aopd(std::vector<double>{0.0, 0.0});
  EXPECT_EQ(z.mopd, 0.0);
  EXPECT_EQ(z.aopd, 0.0);
  const auto s = mopd_aopd(std::vector<double>{0.1, 0.3});
  EXPECT_DOUBLE_EQ(s.mopd, 0.3);
  EXPECT_DOUBLE_EQ(s.aopd, 0.2);
  Rng rng(4);
  std::vector<double> v(9);
  double mx = 0.0, sum = 0.0;
  for (double& x : v) {
    x = rng.uniform();
    mx = std::max(mx, x);
    sum += x;
  }
  const auto r = mopd_aopd(v);
  EXPECT_EQ(r.mopd, mx);
  EXPECT_NEAR(r.aopd, sum / 9.0, 1e-15);
  EXPECT_GE(r.mopd, r.aopd);
}

TEST(IncrementReport, SingleLayerExample) {
  Network base({4, 1, 1}, {LayerSpec::dense(3)});
  std::vector<TaskPrivateParams> tasks(2);
  EXPECT_EQ(increment_report(base, std::span(tasks.data(), 1)).cumulative.back(), 0.0);
  TaskLayerParams p;
  p.r.assign(3, 1.0);
  p.s.assign(4, 1.0);
  p.low_rank.u = Matrix(3, 2);
  p.low_rank.v = Matrix(4, 2);
  p.low_rank.sigma.assign(2, 1.0);
  tasks[1].layers = {p};
  tasks[1].head.weight = Matrix(10, 3);
  tasks[1].biases = {Vector(3)};
  const auto r = increment_report(base, tasks);
  EXPECT_EQ(r.base_size, 12u);
  EXPECT_EQ(r.added, (std::vector<std::size_t>{0, 23}));
  EXPECT_DOUBLE_EQ(r.cumulative.back(), 23.0 / 12.0);
}

TEST(IncrementReport, MultiLayerCountingOracle) {
  Network base({6, 1, 1}, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(4)});
  std::vector<TaskPrivateParams> tasks(3);
  const std::size_t ks[2][2] = {{1, 3}, {0, 2}};
  for (std::size_t t = 1; t < 3; ++t)
    for (std::size_t l = 0; l < 2; ++l) {
      const std::size_t out = l == 0 ? 5 : 4, in = l == 0 ? 6 : 5, k = ks[t - 1][l];
      TaskLayerParams p;
      p.layer_index = l;
      p.r.assign(out, 1.0);
      p.s.assign(in, 1.0);
      p.low_rank.u = Matrix(out, k);
      p.low_rank.v = Matrix(in, k);
      p.low_rank.sigma.assign(k, 1.0);
      tasks[t].layers.push_back(p);
    }
  const auto r = increment_report(base, tasks);
  const std::size_t t1 = (11 * 2 + 1) + (9 * 4 + 3), t2 = (11 * 1 + 0) + (9 * 3 + 2);
  EXPECT_EQ(r.added, (std::vector<std::size_t>{0, t1, t2}));
  EXPECT_EQ(r.base_size, 50u);
  EXPECT_DOUBLE_EQ(r.cumulative[2], static_cast<double>(t1 + t2) / 50.0);
  EXPECT_LE(r.cumulative[1], r.cumulative[2]);
}
