#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "halrp/nn.hpp"

namespace halrp {

struct TaskDataset {
  Batch train;
  Batch test;
  std::size_t class_count = 0;
  int task_id = 0;          // canonical identity, independent of sequence position
  std::string provenance;   // generator and seed

  bool operator==(const TaskDataset&) const = default;
};

/// A permutation of [0, T) giving the sequence of canonical task ids.
struct TaskOrder {
  std::vector<std::size_t> permutation;

  /// Same permutation numpy's legacy RandomState(seed).permutation(T) gives.
  static TaskOrder seeded(std::size_t tasks, std::uint32_t seed);
  /// Throws InvalidArgument unless `order` is a permutation.
  static TaskOrder explicit_list(std::vector<std::size_t> order);
  static TaskOrder identity(std::size_t tasks);
};

/// Task 0 is `base`; task t applies a seeded feature permutation to every input.
std::vector<TaskDataset> gen_permuted(const TaskDataset& base, std::size_t tasks, std::uint64_t seed);

/// Partitions the classes of `pool` into groups of `classes_per_task`
/// (group g holds classes [g*c, (g+1)*c)), relabels each group to
/// [0, c), and sequences the groups by `order`.
std::vector<TaskDataset> gen_split(const TaskDataset& pool, std::size_t classes_per_task, const TaskOrder& order);

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t dims = 64;
  std::size_t samples_per_class = 200;  // train + test
  double noise = 0.1;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSpec&) const = default;
};

/// Gaussian clusters around uniform prototypes in [0,1]^dims, clamped to
/// [0,1] and rounded to float precision.
TaskDataset gen_synthetic(const SyntheticSpec& spec);

/// Unsplit labeled samples, the unit of the dataset file format.
struct LabeledPool {
  Batch data;
  std::size_t classes = 0;
  bool operator==(const LabeledPool&) const = default;
};

/// Binary format: "HDSET1\n", header lines count=/dims=/classes=, a blank
/// line, then per record D little-endian float32 values and a uint32 label.
void save_dataset(const std::filesystem::path& path, const LabeledPool& pool);
LabeledPool load_dataset(const std::filesystem::path& path);
/// Rows of `label,x1,...,xD`; classes = max label + 1.
LabeledPool load_csv(const std::filesystem::path& path);

/// Seeded per-class train/test split of a pool.
TaskDataset split_pool(const LabeledPool& pool, double test_fraction, std::uint64_t seed);

}  // namespace halrp
