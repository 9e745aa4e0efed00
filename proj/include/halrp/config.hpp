#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halrp/cl_engine.hpp"
#include "halrp/error.hpp"
#include "halrp/tasks.hpp"

namespace halrp {

/// Malformed config text. `line()` is 0 for errors not tied to a line.
class ConfigError : public FormatError {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class DatasetSource { Synthetic, File };
enum class TaskKind { Permuted, Split };

struct DataConfig {
  DatasetSource source = DatasetSource::Synthetic;
  SyntheticSpec synthetic;
  std::filesystem::path path;          // HDSET1 or .csv when source = File
  std::size_t tasks = 5;
  TaskKind kind = TaskKind::Permuted;
  std::size_t classes_per_task = 2;    // split tasks
  std::optional<std::vector<std::size_t>> order;  // explicit canonical order
  std::optional<std::uint32_t> order_seed;        // seeded order

  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  ExperimentConfig experiment;
  DataConfig data;
};

/// `key = value` lines, `#` starts a comment. Unknown, duplicate and
/// missing required keys (dataset, input, layers) raise ConfigError.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text that parses back to the same config.
std::string config_text(const RunConfig& config);

/// "64" (flat) or "CxHxW".
Shape parse_shape(std::string_view text);
std::string format_shape(const Shape& shape);
/// Comma-separated "dense:OUT", "conv:OUT:K[:STRIDE[:PAD]]", "relu", "maxpool:W", "flatten".
std::vector<LayerSpec> parse_layers(std::string_view text);
std::string format_layers(const std::vector<LayerSpec>& layers);
/// "2,0,1" into a validated permutation.
std::vector<std::size_t> parse_order(std::string_view text);

/// The canonical task list in sequence order.
std::vector<TaskDataset> build_tasks(const DataConfig& data);

}  // namespace halrp
