#pragma once

#include <map>
#include <string>
#include <vector>

#include "halrp/cl_engine.hpp"
#include "halrp/config.hpp"
#include "halrp/metrics.hpp"

namespace halrp {

/// One row per learned task: task_index, tasks_seen, acc_0..acc_{T-1}
/// (empty for unseen tasks), avg_accuracy, bwt, increment_ratio, wall_ms.
/// bwt = mean over j < i of A[i][j] - A[j][j].
std::string results_csv(const RunResult& result);

/// CSV fields plus mode, seed, canonical order and per-layer ranks.
std::string results_json(const RunResult& result, const RunConfig& config);

struct OrderSweepResult {
  std::vector<std::vector<std::size_t>> orders;
  OrderRunSet runs;
  std::map<int, double> opd;
  OpdSummary summary;
  std::vector<std::string> warnings;
};

/// Runs the experiment once per data variant (each with its own task order)
/// and collects the final accuracy of every canonical task.
OrderSweepResult sweep_orders(const ExperimentConfig& experiment, const std::vector<DataConfig>& variants);

/// Per-task OPD table followed by MOPD and AOPD.
std::string orders_csv(const OrderSweepResult& sweep);
std::string orders_json(const OrderSweepResult& sweep);

}  // namespace halrp
