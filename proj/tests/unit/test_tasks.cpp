#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "halrp/error.hpp"
#include "halrp/tasks.hpp"

using namespace halrp;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) { return fs::path(::testing::TempDir()) / name; }

SyntheticSpec small_spec(std::uint64_t seed = 1) {
  SyntheticSpec s;
  s.classes = 4;
  s.dims = 12;
  s.samples_per_class = 40;
  s.noise = 0.1;
  s.seed = seed;
  return s;
}

std::vector<double> sorted_row(const Matrix& m, std::size_t r) {
  std::vector<double> v(m.row(r).begin(), m.row(r).end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(GenSynthetic, DeterministicAndInRange) {
  const auto a = gen_synthetic(small_spec()), b = gen_synthetic(small_spec());
  EXPECT_EQ(a, b);
  EXPECT_NE(a, gen_synthetic(small_spec(2)));
  for (double x : a.train.inputs.data()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_EQ(x, static_cast<double>(static_cast<float>(x)));
  }
  EXPECT_EQ(a.train.size() + a.test.size(), 160u);
  for (auto y : a.train.labels) EXPECT_LT(y, 4u);
}

TEST(GenSynthetic, ZeroNoiseCollapsesToPrototypes) {
  SyntheticSpec s = small_spec();
  s.noise = 0.0;
  const auto d = gen_synthetic(s);
  std::vector<std::vector<double>> proto(4);
  for (std::size_t n = 0; n < d.train.size(); ++n) {
    auto& p = proto[d.train.labels[n]];
    std::vector<double> row(d.train.inputs.row(n).begin(), d.train.inputs.row(n).end());
    if (p.empty()) p = row;
    EXPECT_EQ(row, p);
  }
}

TEST(GenSynthetic, TwoClassLowNoiseIsLearnable) {
  SyntheticSpec s;
  s.classes = 2;
  s.dims = 16;
  s.samples_per_class = 200;
  s.noise = 0.05;
  s.seed = 3;
  const auto d = gen_synthetic(s);
  Network net({16, 1, 1}, {LayerSpec::dense(16), LayerSpec::relu()});
  net.initialize(4);
  net.add_head(0, 2, 5);
  TrainOptions o;
  o.epochs = 20;
  o.lr = 0.05;
  o.batch_size = 16;
  net = train(net, 0, d.train, o);
  EXPECT_GT(accuracy(net, 0, d.test), 0.95);
}

TEST(GenPermuted, SingleTaskIsTheBase) {
  const auto base = gen_synthetic(small_spec());
  const auto tasks = gen_permuted(base, 1, 9);
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].train, base.train);
  EXPECT_EQ(tasks[0].test, base.test);
}

TEST(GenPermuted, PermutesFeaturesAndKeepsLabels) {
  const auto base = gen_synthetic(small_spec());
  const auto tasks = gen_permuted(base, 3, 9);
  EXPECT_EQ(tasks, gen_permuted(base, 3, 9));
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(tasks[t].task_id, static_cast<int>(t));
    EXPECT_EQ(tasks[t].train.labels, base.train.labels);
    for (std::size_t n = 0; n < base.train.size(); ++n)
      EXPECT_EQ(sorted_row(tasks[t].train.inputs, n), sorted_row(base.train.inputs, n));
  }
  EXPECT_NE(tasks[1].train.inputs, base.train.inputs);
  EXPECT_NE(tasks[1].train.inputs, tasks[2].train.inputs);
}

TEST(GenSplit, DisjointRelabeledGroups) {
  const auto pool = gen_synthetic(small_spec());
  const auto tasks = gen_split(pool, 2, TaskOrder::identity(2));
  ASSERT_EQ(tasks.size(), 2u);
  std::size_t total = 0;
  for (const auto& t : tasks) {
    EXPECT_EQ(t.class_count, 2u);
    for (auto y : t.train.labels) EXPECT_LT(y, 2u);
    total += t.train.size();
  }
  EXPECT_EQ(total, pool.train.size());
  // Original rows of group 0 carry classes 0 and 1 only.
  std::set<std::vector<double>> rows0, rows1;
  for (std::size_t n = 0; n < tasks[0].train.size(); ++n) rows0.insert(sorted_row(tasks[0].train.inputs, n));
  for (std::size_t n = 0; n < tasks[1].train.size(); ++n) rows1.insert(sorted_row(tasks[1].train.inputs, n));
  for (const auto& r : rows0) EXPECT_FALSE(rows1.contains(r));
}

TEST(GenSplit, OrderSwapsSequenceOnly) {
  const auto pool = gen_synthetic(small_spec());
  const auto a = gen_split(pool, 2, TaskOrder::explicit_list({0, 1}));
  const auto b = gen_split(pool, 2, TaskOrder::explicit_list({1, 0}));
  EXPECT_EQ(a[0], b[1]);
  EXPECT_EQ(a[1], b[0]);
  EXPECT_EQ(b[0].task_id, 1);
}

TEST(GenSplit, RejectsIndivisibleClassCount) {
  const auto pool = gen_synthetic(small_spec());
  EXPECT_THROW(gen_split(pool, 3, TaskOrder::identity(1)), InvalidArgument);
}

TEST(TaskOrder, ExplicitListIsValidated) {
  EXPECT_EQ(TaskOrder::explicit_list({2, 0, 1}).permutation, (std::vector<std::size_t>{2, 0, 1}));
  EXPECT_THROW(TaskOrder::explicit_list({0, 0, 1}), InvalidArgument);
  EXPECT_THROW(TaskOrder::explicit_list({0, 3}), InvalidArgument);
  EXPECT_EQ(TaskOrder::seeded(40, 1).permutation.front(), 2u);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  const auto d = gen_synthetic(small_spec());
  const LabeledPool pool{d.train, d.class_count};
  const auto path = temp_file("pool.hdset");
  save_dataset(path, pool);
  EXPECT_EQ(load_dataset(path), pool);
}

TEST(DatasetFile, MalformedHeaderNamesTheLine) {
  const auto path = temp_file("bad.hdset");
  std::ofstream(path, std::ios::binary) << "HDSET1\ncount=2\ndims=x\nclasses=2\n\n";
  try {
    load_dataset(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::ofstream(path, std::ios::binary) << "NOTSET\n";
  EXPECT_THROW(load_dataset(path), FormatError);
}

TEST(DatasetFile, TruncatedPayloadIsReported) {
  const auto d = gen_synthetic(small_spec());
  const auto path = temp_file("trunc.hdset");
  save_dataset(path, LabeledPool{d.train, d.class_count});
  fs::resize_file(path, fs::file_size(path) - 3);
  try {
    load_dataset(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
  }
}

TEST(DatasetFile, CsvImport) {
  const auto path = temp_file("pool.csv");
  std::ofstream(path) << "1,0.5,0.25\n0,1,0\n2,0,0.75\n";
  const LabeledPool p = load_csv(path);
  EXPECT_EQ(p.classes, 3u);
  EXPECT_EQ(p.data.labels, (std::vector<std::uint32_t>{1, 0, 2}));
  EXPECT_EQ(p.data.inputs(2, 1), 0.75);
}

TEST(SplitPool, DisjointPerClassSplit) {
  const auto d = gen_synthetic(small_spec());
  const LabeledPool pool{d.train, d.class_count};
  const auto t = split_pool(pool, 0.25, 3);
  EXPECT_EQ(t.train.size() + t.test.size(), pool.data.size());
  EXPECT_EQ(t, split_pool(pool, 0.25, 3));
}
