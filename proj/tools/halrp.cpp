#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "halrp/checkpoint.hpp"
#include "halrp/cl_engine.hpp"
#include "halrp/config.hpp"
#include "halrp/error.hpp"
#include "halrp/metrics.hpp"
#include "halrp/report.hpp"
#include "halrp/verify.hpp"

namespace fs = std::filesystem;
using namespace halrp;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> alpha;
  std::optional<std::size_t> warmup_epochs;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<double> lambda0;
  std::optional<double> lambda1;
  std::optional<std::string> prune;
  std::optional<double> prune_gamma;
  std::optional<double> prune_tau;
  bool timing = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Training seed");
    cmd->add_option("--mode", mode, "halrp | stl | seq_finetune");
    cmd->add_option("--alpha", alpha, "Approximation rate in [0, 1]");
    cmd->add_option("--warmup-epochs", warmup_epochs, "Warm-up epochs per task");
    cmd->add_option("--epochs", epochs, "Total epochs per task");
    cmd->add_option("--lr", lr, "Learning rate");
    cmd->add_option("--lambda0", lambda0, "L1 penalty weight");
    cmd->add_option("--lambda1", lambda1, "L2 penalty weight");
    cmd->add_option("--prune", prune, "off | absolute | percentile | mixed");
    cmd->add_option("--prune-gamma", prune_gamma, "Percentile retention target");
    cmd->add_option("--prune-tau", prune_tau, "Absolute pruning threshold");
    cmd->add_flag("--timing", timing, "Record wall-clock time per task");
  }

  void apply(ExperimentConfig& e) const {
    if (seed) e.seed = *seed;
    if (mode) e.mode = parse_mode(*mode);
    if (alpha) e.alpha = *alpha;
    if (warmup_epochs) e.warmup_epochs = *warmup_epochs;
    if (epochs) e.epochs = *epochs;
    if (lr) e.lr = *lr;
    if (lambda0) e.lambda0 = *lambda0;
    if (lambda1) e.lambda1 = *lambda1;
    if (prune) e.prune.mode = parse_prune_mode(*prune);
    if (prune_gamma) e.prune.gamma = *prune_gamma;
    if (prune_tau) e.prune.tau = *prune_tau;
    e.record_timing = timing;
    e.validate();
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void print_warnings(const ContinualState& state) {
  for (const auto& w : state.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const fs::path& config_path, const Overrides& ov, const fs::path& out) {
  RunConfig cfg = load_config(config_path);
  ov.apply(cfg.experiment);
  const auto tasks = build_tasks(cfg.data);
  RunResult result = run_sequence(cfg.experiment, tasks);
  print_warnings(result.state);

  fs::create_directories(out);
  const std::string csv = results_csv(result);
  write_file(out / "results.csv", csv);
  write_file(out / "summary.json", results_json(result, cfg));
  save_checkpoint(out / "checkpoint.halrp", Checkpoint{cfg.data, result.state});
  std::cout << csv;
  const auto& last = result.records.back();
  std::printf("final avg_accuracy=%.6f bwt=%.6f increment_ratio=%.6f\n", last.avg_accuracy, last.bwt,
              last.increment_ratio);
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  const auto results = verify::run_all(seed);
  std::cout << verify::format_report(results);
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}

std::vector<std::vector<std::size_t>> parse_order_list(const std::string& text) {
  std::vector<std::vector<std::size_t>> orders;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(';', start);
    orders.push_back(parse_order(text.substr(start, end == std::string::npos ? std::string::npos : end - start)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return orders;
}

int cmd_orders(const fs::path& config_path, const Overrides& ov, const std::string& orders_text,
               const std::vector<std::uint32_t>& order_seeds, const fs::path& out) {
  RunConfig cfg = load_config(config_path);
  ov.apply(cfg.experiment);

  std::vector<DataConfig> variants;
  if (!orders_text.empty()) {
    for (auto& order : parse_order_list(orders_text)) {
      DataConfig d = cfg.data;
      d.order = order;
      d.order_seed.reset();
      variants.push_back(std::move(d));
    }
  } else {
    for (std::uint32_t s : order_seeds) {
      DataConfig d = cfg.data;
      d.order.reset();
      d.order_seed = s;
      variants.push_back(std::move(d));
    }
  }
  if (variants.size() < 2) throw InvalidArgument("orders needs at least two orders or order seeds");

  const OrderSweepResult sweep = sweep_orders(cfg.experiment, variants);
  for (const auto& w : sweep.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(out);
  const std::string csv = orders_csv(sweep);
  write_file(out / "orders.csv", csv);
  write_file(out / "orders.json", orders_json(sweep));
  std::cout << csv;
  return 0;
}

int cmd_eval(const fs::path& checkpoint) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto tasks = build_tasks(ckpt.data);
  const auto row = evaluate_all(ckpt.state, tasks);
  const AccuracyMatrix& h = ckpt.state.history;
  bool same = h.tasks() == row.size();
  std::printf("task,canonical_id,accuracy,recorded\n");
  for (std::size_t j = 0; j < row.size(); ++j) {
    const bool recorded = same && h.defined(h.tasks() - 1, j);
    const double want = recorded ? h.at(h.tasks() - 1, j) : 0.0;
    same = same && recorded && want == row[j];
    std::printf("%zu,%d,%.6f,%.6f\n", j, ckpt.state.canonical_ids.at(j), row[j], want);
  }
  std::printf("matches_recorded=%s\n", same ? "yes" : "no");
  return same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual learning with low-rank task perturbations of a frozen base network"};
  app.require_subcommand(1);

  fs::path config_path;
  fs::path out = "out";
  Overrides ov;

  auto* run = app.add_subcommand("run", "Learn a task sequence and write results, summary and checkpoint");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", out, "Output directory");
  ov.attach(run);

  std::uint64_t verify_seed = 0;
  auto* ver = app.add_subcommand("verify", "Run the numerical oracle suites");
  ver->add_option("--seed", verify_seed, "Seed for the random trials");

  std::string orders_text;
  std::vector<std::uint32_t> order_seeds;
  fs::path orders_out = "out";
  Overrides orders_ov;
  auto* orders = app.add_subcommand("orders", "Sweep task orders and report OPD, MOPD and AOPD");
  orders->add_option("--config", config_path, "Config file")->required();
  auto* explicit_opt = orders->add_option("--orders", orders_text, "Explicit orders, e.g. \"2,0,1;0,1,2\"");
  orders->add_option("--order-seeds", order_seeds, "Seeds for shuffled orders")->delimiter(',')->excludes(explicit_opt);
  orders->add_option("--out", orders_out, "Output directory");
  orders_ov.attach(orders);

  fs::path ckpt_path;
  auto* eval = app.add_subcommand("eval", "Reload a checkpoint and re-evaluate every task");
  eval->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, ov, out);
    if (*ver) return cmd_verify(verify_seed);
    if (*orders) return cmd_orders(config_path, orders_ov, orders_text, order_seeds, orders_out);
    if (*eval) return cmd_eval(ckpt_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
