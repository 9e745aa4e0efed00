#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "halrp/report.hpp"

using namespace halrp;

namespace {

RunResult fake_run() {
  RunResult r;
  r.accuracy = AccuracyMatrix(2);
  r.accuracy.set(0, 0, 0.9);
  r.accuracy.set(1, 0, 0.8);
  r.accuracy.set(1, 1, 0.7);
  TaskRecord a;
  a.accuracies = {0.9};
  a.avg_accuracy = 0.9;
  TaskRecord b;
  b.position = 1;
  b.canonical_id = 3;
  b.accuracies = {0.8, 0.7};
  b.avg_accuracy = 0.75;
  b.bwt = -0.1;
  b.increment_ratio = 0.125;
  b.info.ranks = {2, 1};
  r.records = {a, b};
  r.state.warnings = {"something odd"};
  return r;
}

}  // namespace

TEST(ResultsCsv, LayoutAndUnseenCells) {
  const std::string csv = results_csv(fake_run());
  EXPECT_EQ(csv,
            "task_index,tasks_seen,acc_0,acc_1,avg_accuracy,bwt,increment_ratio,wall_ms\n"
            "0,1,0.900000,,0.900000,0.000000,0.000000,0.000000\n"
            "1,2,0.800000,0.700000,0.750000,-0.100000,0.125000,0.000000\n");
}

TEST(ResultsJson, CarriesRanksOrderAndWarnings) {
  RunConfig cfg;
  cfg.experiment.seed = 4;
  const auto j = nlohmann::json::parse(results_json(fake_run(), cfg));
  EXPECT_EQ(j["mode"], "halrp");
  EXPECT_EQ(j["seed"], 4);
  EXPECT_EQ(j["canonical_order"], nlohmann::json::array({0, 3}));
  EXPECT_EQ(j["tasks"][1]["ranks"], nlohmann::json::array({2, 1}));
  EXPECT_DOUBLE_EQ(j["final"]["bwt"].get<double>(), -0.1);
  EXPECT_EQ(j["warnings"][0], "something odd");
}

TEST(OrdersCsv, TableAndSummary) {
  OrderSweepResult s;
  s.orders = {{0, 1}, {1, 0}};
  s.runs.runs = {{{0, 0.9}, {1, 0.5}}, {{0, 0.8}, {1, 0.5}}};
  s.opd = opd(s.runs);
  s.summary = mopd_aopd(std::vector<double>{s.opd[0], s.opd[1]});
  const std::string csv = orders_csv(s);
  EXPECT_NE(csv.find("# order 1: 1,0\n"), std::string::npos);
  EXPECT_NE(csv.find("task_id,acc_order_0,acc_order_1,opd\n0,0.900000,0.800000,0.100000\n1,0.500000,0.500000,0.000000\n"),
            std::string::npos)
      << csv;
  EXPECT_NE(csv.find("MOPD,0.100000\nAOPD,0.050000\n"), std::string::npos);
  const auto j = nlohmann::json::parse(orders_json(s));
  EXPECT_DOUBLE_EQ(j["aopd"].get<double>(), 0.05);
}

TEST(SweepOrders, IdenticalOrdersGiveZeroOpd) {
  DataConfig d;
  d.synthetic = {3, 12, 40, 0.1, 0.25, 2};
  d.tasks = 2;
  d.order = std::vector<std::size_t>{1, 0};
  ExperimentConfig e;
  e.epochs = 3;
  e.lr = 0.05;
  e.batch_size = 16;
  e.arch = {{12, 1, 1}, {LayerSpec::dense(8), LayerSpec::relu()}};
  const auto s = sweep_orders(e, {d, d});
  EXPECT_EQ(s.orders[0], (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(s.summary.mopd, 0.0);
}
