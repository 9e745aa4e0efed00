#include "halrp/cl_engine.hpp"

#include <bit>
#include <chrono>
#include <string>

#include "halrp/error.hpp"
#include "halrp/random.hpp"
#include "halrp/rank_select.hpp"

namespace halrp {

namespace {

// Stream salts for the seeded phases.
constexpr std::uint64_t kInitSalt = 0x100;
constexpr std::uint64_t kHeadSalt = 0x200;
constexpr std::uint64_t kBaseTrainSalt = 0x300;
constexpr std::uint64_t kWarmupSalt = 0x400;
constexpr std::uint64_t kFinetuneSalt = 0x500;

TrainOptions train_options(const ExperimentConfig& c, std::size_t epochs, std::uint64_t seed) {
  TrainOptions o;
  o.epochs = epochs;
  o.lr = c.lr;
  o.batch_size = c.batch_size;
  o.momentum = c.momentum;
  o.seed = seed;
  return o;
}

std::vector<Vector> biases_of(const Network& net) {
  std::vector<Vector> b;
  for (const auto& p : net.params()) b.push_back(p.bias);
  return b;
}

Network fresh_network(const ExperimentConfig& c, std::uint64_t salt) {
  Network net(c.arch.input, c.arch.trunk);
  net.initialize(mix_seed(c.seed, salt));
  return net;
}

void check_input(const ExperimentConfig& c, const TaskDataset& d) {
  if (d.train.inputs.cols() != c.arch.input.size()) {
    throw ShapeError("task " + std::to_string(d.task_id) + " has " + std::to_string(d.train.inputs.cols()) +
                     " features, network expects " + std::to_string(c.arch.input.size()));
  }
  if (d.train.size() == 0) throw InvalidArgument("task " + std::to_string(d.task_id) + " has no training samples");
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "halrp") return Mode::Halrp;
  if (name == "stl") return Mode::Stl;
  if (name == "seq_finetune") return Mode::SeqFinetune;
  throw InvalidArgument("unknown mode '" + std::string(name) + "' (expected halrp|stl|seq_finetune)");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Halrp: return "halrp";
    case Mode::Stl: return "stl";
    case Mode::SeqFinetune: return "seq_finetune";
  }
  return "halrp";
}

void ExperimentConfig::validate() const {
  if (warmup_epochs < 1 || warmup_epochs > epochs) {
    throw InvalidArgument("warmup_epochs must satisfy 1 <= warmup_epochs <= epochs");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (!(lr >= 0.0)) throw InvalidArgument("lr must be nonnegative");
  if (!(lambda0 >= 0.0) || !(lambda1 >= 0.0)) throw InvalidArgument("lambda0 and lambda1 must be nonnegative");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (prune.mode != PruneMode::Off) {
    if (!(prune.tau > 0.0)) throw InvalidArgument("prune tau must be positive");
    if (!(prune.gamma > 0.0 && prune.gamma <= 1.0)) throw InvalidArgument("prune gamma must lie in (0, 1]");
  }
}

ContinualState train_base(const ExperimentConfig& config, const TaskDataset& first) {
  config.validate();
  check_input(config, first);
  ContinualState state;
  state.config = config;
  Network net = fresh_network(config, kInitSalt);
  net.add_head(0, first.class_count, mix_seed(config.seed, kHeadSalt));
  net = train(std::move(net), 0, first.train, train_options(config, config.epochs, mix_seed(config.seed, kBaseTrainSalt)));

  TaskPrivateParams p;
  p.task_id = 0;
  p.biases = biases_of(net);
  p.head = net.head(0);
  net.heads().clear();
  state.base = std::move(net);
  state.tasks.push_back(std::move(p));
  state.canonical_ids.push_back(first.task_id);
  return state;
}

Network warmup_network(const ContinualState& state, const TaskDataset& task) {
  const ExperimentConfig& c = state.config;
  const int t = static_cast<int>(state.tasks.size());
  Network net = state.base;
  for (std::size_t l = 0; l < net.params().size(); ++l) net.params()[l].bias = state.tasks.front().biases[l];
  net.add_head(t, task.class_count, mix_seed(c.seed, kHeadSalt + static_cast<std::uint64_t>(t)));
  const auto warm = train_options(c, c.warmup_epochs, mix_seed(c.seed, kWarmupSalt + static_cast<std::uint64_t>(t)));
  return train(std::move(net), t, task.train, warm);
}

namespace {

LearnInfo learn_halrp(ContinualState& state, const TaskDataset& task, int t) {
  const ExperimentConfig& c = state.config;
  LearnInfo info;

  // (a) warm-up from the base weights
  Network net = warmup_network(state, task);

  // (b) decompose every parametric layer against the base
  const std::size_t layers = net.params().size();
  std::vector<Decomposition> decomp;
  decomp.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    decomp.push_back(decompose_conv(net.params()[l].weight, state.base.params()[l].weight));
  }

  // (c) full-set gradient at the free weights
  const BackwardResult g = backward(net, t, task.train);
  std::vector<double> fisher(layers);
  std::vector<Vector> spectra(layers);
  std::vector<std::size_t> capacity(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    fisher[l] = fisher_norm(g.grads.layers[l].weight.data());
    spectra[l] = decomp[l].factors.sigma;
    capacity[l] = spectra[l].size();
  }

  // (d) global rank budget
  const auto items = importance_scores(fisher, spectra);
  const RankBudget budget = select_ranks(items, c.alpha, capacity);
  if (budget.total_score <= 0.0) {
    state.warnings.push_back("task " + std::to_string(t) +
                             ": all importance scores are zero (degenerate task); keeping rank 0 in every layer");
  }
  info.ranks = budget.k_per_layer;

  // (e) re-initialize from the truncated factors on top of the frozen base
  for (std::size_t l = 0; l < layers; ++l) {
    ParamLayer& layer = net.params()[l];
    layer.weight = state.base.params()[l].weight;
    layer.perturbation = init_layer_params(decomp[l], budget.k_per_layer[l], l);
  }

  // (f) fine-tune the task parameters with the penalty
  auto fine = train_options(c, c.epochs - c.warmup_epochs, mix_seed(c.seed, kFinetuneSalt + static_cast<std::uint64_t>(t)));
  fine.reg = RegCoefficients{c.lambda0, c.lambda1};
  net = train(std::move(net), t, task.train, fine);

  TaskPrivateParams p;
  p.task_id = t;
  for (auto& layer : net.params()) p.layers.push_back(*layer.perturbation);
  p.biases = biases_of(net);
  p.head = net.head(t);
  state.tasks.push_back(std::move(p));

  // (g) prune once the cumulative growth passes the trigger
  if (c.prune.mode != PruneMode::Off) {
    const auto report = increment_report(state.base, state.tasks);
    if (report.cumulative.back() > c.p) {
      const auto pool = lowrank_pool(state.tasks);
      if (!pool.empty()) {
        info.prune_threshold = prune_threshold(c.prune, pool);
        info.pruned_entries = prune_tasks(state.tasks, info.prune_threshold);
        info.pruned = true;
      }
    }
  }
  return info;
}

LearnInfo learn_stl(ContinualState& state, const TaskDataset& task, int t) {
  const ExperimentConfig& c = state.config;
  Network net = fresh_network(c, kInitSalt + static_cast<std::uint64_t>(t));
  net.add_head(t, task.class_count, mix_seed(c.seed, kHeadSalt + static_cast<std::uint64_t>(t)));
  net = train(std::move(net), t, task.train,
              train_options(c, c.epochs, mix_seed(c.seed, kBaseTrainSalt + static_cast<std::uint64_t>(t))));
  TaskPrivateParams p;
  p.task_id = t;
  for (const auto& layer : net.params()) p.own_weights.push_back(layer.weight);
  p.biases = biases_of(net);
  p.head = net.head(t);
  state.tasks.push_back(std::move(p));
  return {};
}

LearnInfo learn_seq(ContinualState& state, const TaskDataset& task, int t) {
  const ExperimentConfig& c = state.config;
  const TaskPrivateParams& prev = state.tasks.back();
  if (prev.head.weight.rows() != task.class_count) {
    throw InvalidArgument("seq_finetune shares one head; task " + std::to_string(task.task_id) + " has " +
                          std::to_string(task.class_count) + " classes, expected " +
                          std::to_string(prev.head.weight.rows()));
  }
  Network net = state.base;
  for (std::size_t l = 0; l < net.params().size(); ++l) net.params()[l].bias = prev.biases[l];
  net.heads()[0] = prev.head;
  net = train(std::move(net), 0, task.train,
              train_options(c, c.epochs, mix_seed(c.seed, kBaseTrainSalt + static_cast<std::uint64_t>(t))));

  TaskPrivateParams p;
  p.task_id = t;
  p.biases = biases_of(net);
  p.head = net.head(0);
  // Every task is served by the single current network.
  for (auto& old : state.tasks) {
    old.biases = p.biases;
    old.head = p.head;
  }
  net.heads().clear();
  state.base = std::move(net);
  state.tasks.push_back(std::move(p));
  return {};
}

}  // namespace

LearnInfo learn_task(ContinualState& state, const TaskDataset& task) {
  check_input(state.config, task);
  const int t = static_cast<int>(state.tasks.size());
  LearnInfo info;
  switch (state.config.mode) {
    case Mode::Halrp: info = learn_halrp(state, task, t); break;
    case Mode::Stl: info = learn_stl(state, task, t); break;
    case Mode::SeqFinetune: info = learn_seq(state, task, t); break;
  }
  state.canonical_ids.push_back(task.task_id);
  return info;
}

Network network_for_task(const ContinualState& state, std::size_t t) {
  if (t >= state.tasks.size()) throw InvalidArgument("unknown task position " + std::to_string(t));
  const TaskPrivateParams& p = state.tasks[t];
  Network net = state.base;
  for (std::size_t l = 0; l < net.params().size(); ++l) {
    ParamLayer& layer = net.params()[l];
    layer.bias = p.biases.at(l);
    if (!p.own_weights.empty()) layer.weight = p.own_weights.at(l);
  }
  for (const auto& lp : p.layers) net.params().at(lp.layer_index).perturbation = lp;
  net.heads()[static_cast<int>(t)] = p.head;
  return net;
}

std::vector<std::uint32_t> predict(const ContinualState& state, std::size_t t, const Matrix& inputs) {
  return predict_labels(network_for_task(state, t), static_cast<int>(t), inputs);
}

std::vector<double> evaluate_all(const ContinualState& state, std::span<const TaskDataset> tasks) {
  if (tasks.size() < state.tasks.size()) throw InvalidArgument("evaluate_all: fewer datasets than learned tasks");
  std::vector<double> row;
  for (std::size_t j = 0; j < state.tasks.size(); ++j) {
    row.push_back(accuracy(network_for_task(state, j), static_cast<int>(j), tasks[j].test));
  }
  return row;
}

std::uint64_t base_hash(const ContinualState& state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& layer : state.base.params()) {
    for (double w : layer.weight.data()) {
      auto bits = std::bit_cast<std::uint64_t>(w);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

IncrementReport increment_report(const ContinualState& state) { return increment_report(state.base, state.tasks); }

RunResult run_sequence(const ExperimentConfig& config, std::span<const TaskDataset> tasks) {
  if (tasks.empty()) throw InvalidArgument("run_sequence: need at least one task");
  RunResult result;
  result.accuracy = AccuracyMatrix(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    TaskRecord rec;
    rec.position = i;
    rec.canonical_id = tasks[i].task_id;
    if (i == 0) {
      result.state = train_base(config, tasks[0]);
    } else {
      rec.info = learn_task(result.state, tasks[i]);
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;

    rec.accuracies = evaluate_all(result.state, tasks.first(i + 1));
    for (std::size_t j = 0; j <= i; ++j) result.accuracy.set(i, j, rec.accuracies[j]);
    const AccuracyMatrix seen = result.accuracy.prefix(i + 1);
    rec.avg_accuracy = final_avg_accuracy(seen);
    rec.bwt = bwt(seen);
    rec.increment_ratio = increment_report(result.state).cumulative.back();
    if (config.record_timing) rec.wall_ms = std::chrono::duration<double, std::milli>(elapsed).count();
    result.records.push_back(std::move(rec));
  }
  result.state.history = result.accuracy;
  return result;
}

}  // namespace halrp
