#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halrp/metrics.hpp"
#include "halrp/nn.hpp"
#include "halrp/perturb.hpp"
#include "halrp/reg_prune.hpp"
#include "halrp/tasks.hpp"

namespace halrp {

/// halrp: frozen base + low-rank task perturbations.
/// stl: an independent network per task.
/// seq_finetune: one network (shared trunk and head) fine-tuned task after task.
enum class Mode { Halrp, Stl, SeqFinetune };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct Architecture {
  Shape input;
  std::vector<LayerSpec> trunk;
  bool operator==(const Architecture&) const = default;
};

/// Defaults follow the LeNet column of the reference hyperparameter table.
struct ExperimentConfig {
  std::size_t epochs = 20;        // n: total epochs per task
  std::size_t warmup_epochs = 1;  // n_r
  double alpha = 0.9;
  double lr = 1e-3;
  double lambda0 = 1e-4;
  double lambda1 = 1e-4;
  std::size_t batch_size = 128;
  double momentum = 0.0;
  double p = 0.2;                 // cumulative increment ratio that triggers pruning
  PruneSpec prune;
  std::uint64_t seed = 0;
  Mode mode = Mode::Halrp;
  bool record_timing = false;
  Architecture arch;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct ContinualState {
  ExperimentConfig config;
  Network base;                           // frozen after the first task (halrp mode)
  std::vector<TaskPrivateParams> tasks;   // indexed by sequence position
  std::vector<int> canonical_ids;         // dataset identity per position
  AccuracyMatrix history;
  std::vector<std::string> warnings;

  bool operator==(const ContinualState&) const = default;
};

struct LearnInfo {
  std::vector<std::size_t> ranks;   // selected k per parametric layer
  bool pruned = false;
  double prune_threshold = 0.0;
  std::size_t pruned_entries = 0;
};

/// Trains the base network on the first task.
ContinualState train_base(const ExperimentConfig& config, const TaskDataset& first);

/// Free network after the warm-up epochs for the next halrp task: base
/// weights, task-0 biases and a fresh head at the next position.
Network warmup_network(const ContinualState& state, const TaskDataset& task);

/// Learns the next task (position = state.tasks.size()) per the state's mode.
LearnInfo learn_task(ContinualState& state, const TaskDataset& task);

/// Network that serves task position `t` (base + task parameters).
Network network_for_task(const ContinualState& state, std::size_t t);

/// Argmax labels for task position `t`. Throws InvalidArgument for unknown t.
std::vector<std::uint32_t> predict(const ContinualState& state, std::size_t t, const Matrix& inputs);

/// Test accuracy of every learned task, in position order.
std::vector<double> evaluate_all(const ContinualState& state, std::span<const TaskDataset> tasks);

/// FNV-1a hash of the base trunk weights.
std::uint64_t base_hash(const ContinualState& state);

IncrementReport increment_report(const ContinualState& state);

struct TaskRecord {
  std::size_t position = 0;
  int canonical_id = 0;
  std::vector<double> accuracies;  // row of the accuracy matrix
  double avg_accuracy = 0.0;
  double bwt = 0.0;
  double increment_ratio = 0.0;    // cumulative
  double wall_ms = 0.0;
  LearnInfo info;
};

struct RunResult {
  ContinualState state;
  AccuracyMatrix accuracy;
  std::vector<TaskRecord> records;
};

/// Learns `tasks` in sequence and fills the accuracy matrix row by row.
RunResult run_sequence(const ExperimentConfig& config, std::span<const TaskDataset> tasks);

}  // namespace halrp
