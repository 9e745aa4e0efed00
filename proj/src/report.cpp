#include "halrp/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace halrp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string join_order(const std::vector<std::size_t>& order) {
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) out += (i ? "," : "") + std::to_string(order[i]);
  return out;
}

}  // namespace

std::string results_csv(const RunResult& result) {
  const std::size_t tasks = result.records.size();
  std::ostringstream os;
  os << "task_index,tasks_seen";
  for (std::size_t j = 0; j < tasks; ++j) os << ",acc_" << j;
  os << ",avg_accuracy,bwt,increment_ratio,wall_ms\n";
  for (const auto& rec : result.records) {
    os << rec.position << "," << rec.position + 1;
    for (std::size_t j = 0; j < tasks; ++j) {
      os << ",";
      if (j < rec.accuracies.size()) os << num(rec.accuracies[j]);
    }
    os << "," << num(rec.avg_accuracy) << "," << num(rec.bwt) << "," << num(rec.increment_ratio) << ","
       << num(rec.wall_ms) << "\n";
  }
  return os.str();
}

std::string results_json(const RunResult& result, const RunConfig& config) {
  using nlohmann::json;
  json j;
  j["mode"] = std::string(to_string(config.experiment.mode));
  j["seed"] = config.experiment.seed;
  j["bwt_definition"] = "mean over j < T-1 of A[T-1][j] - A[j][j]";
  std::vector<int> order;
  for (const auto& rec : result.records) order.push_back(rec.canonical_id);
  j["canonical_order"] = order;
  json rows = json::array();
  for (const auto& rec : result.records) {
    json row;
    row["task_index"] = rec.position;
    row["tasks_seen"] = rec.position + 1;
    row["canonical_id"] = rec.canonical_id;
    row["accuracies"] = rec.accuracies;
    row["avg_accuracy"] = rec.avg_accuracy;
    row["bwt"] = rec.bwt;
    row["increment_ratio"] = rec.increment_ratio;
    row["wall_ms"] = rec.wall_ms;
    row["ranks"] = rec.info.ranks;
    row["pruned"] = rec.info.pruned;
    if (rec.info.pruned) {
      row["prune_threshold"] = rec.info.prune_threshold;
      row["pruned_entries"] = rec.info.pruned_entries;
    }
    rows.push_back(std::move(row));
  }
  j["tasks"] = std::move(rows);
  if (!result.records.empty()) {
    const auto& last = result.records.back();
    j["final"] = {{"avg_accuracy", last.avg_accuracy}, {"bwt", last.bwt}, {"increment_ratio", last.increment_ratio}};
  }
  j["warnings"] = result.state.warnings;
  return j.dump(2) + "\n";
}

OrderSweepResult sweep_orders(const ExperimentConfig& experiment, const std::vector<DataConfig>& variants) {
  OrderSweepResult sweep;
  for (const auto& d : variants) {
    const auto tasks = build_tasks(d);
    std::vector<std::size_t> order;
    for (const auto& t : tasks) order.push_back(static_cast<std::size_t>(t.task_id));
    const RunResult result = run_sequence(experiment, tasks);
    for (const auto& w : result.state.warnings) sweep.warnings.push_back(w);
    std::map<int, double> final_row;
    for (std::size_t j = 0; j < tasks.size(); ++j) final_row[tasks[j].task_id] = result.records.back().accuracies[j];
    sweep.orders.push_back(std::move(order));
    sweep.runs.runs.push_back(std::move(final_row));
  }
  sweep.opd = opd(sweep.runs);
  std::vector<double> values;
  for (const auto& [task, v] : sweep.opd) values.push_back(v);
  sweep.summary = mopd_aopd(values);
  return sweep;
}

std::string orders_csv(const OrderSweepResult& sweep) {
  std::ostringstream os;
  for (std::size_t r = 0; r < sweep.orders.size(); ++r) os << "# order " << r << ": " << join_order(sweep.orders[r]) << "\n";
  os << "task_id";
  for (std::size_t r = 0; r < sweep.runs.runs.size(); ++r) os << ",acc_order_" << r;
  os << ",opd\n";
  for (const auto& [task, value] : sweep.opd) {
    os << task;
    for (const auto& run : sweep.runs.runs) os << "," << num(run.at(task));
    os << "," << num(value) << "\n";
  }
  os << "MOPD," << num(sweep.summary.mopd) << "\nAOPD," << num(sweep.summary.aopd) << "\n";
  return os.str();
}

std::string orders_json(const OrderSweepResult& sweep) {
  using nlohmann::json;
  json j;
  j["orders"] = sweep.orders;
  json opd = json::object();
  for (const auto& [task, value] : sweep.opd) opd[std::to_string(task)] = value;
  j["opd"] = std::move(opd);
  j["mopd"] = sweep.summary.mopd;
  j["aopd"] = sweep.summary.aopd;
  return j.dump(2) + "\n";
}

}  // namespace halrp
