#include "halrp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "halrp/error.hpp"

namespace halrp {

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& message)
    : FormatError(line == 0 ? source + ": " + message : source + ":" + std::to_string(line) + ": " + message),
      line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t to_size(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InvalidArgument("expected a nonnegative integer, got '" + std::string(s) + "'");
  }
  return v;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InvalidArgument("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

Shape parse_shape(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() == 1) return {to_size(parts[0]), 1, 1};
  if (parts.size() == 3) return {to_size(parts[0]), to_size(parts[1]), to_size(parts[2])};
  throw InvalidArgument("input shape must be N or CxHxW, got '" + std::string(text) + "'");
}

std::string format_shape(const Shape& s) {
  if (s.flat()) return std::to_string(s.channels);
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

std::vector<LayerSpec> parse_layers(std::string_view text) {
  std::vector<LayerSpec> out;
  for (auto item : split(text, ',')) {
    const auto f = split(item, ':');
    const auto& name = f[0];
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (f.size() - 1 < lo || f.size() - 1 > hi) {
        throw InvalidArgument("layer '" + std::string(item) + "' has the wrong number of fields");
      }
    };
    if (name == "dense") {
      arity(1, 1);
      out.push_back(LayerSpec::dense(to_size(f[1])));
    } else if (name == "conv") {
      arity(2, 4);
      out.push_back(LayerSpec::conv2d(to_size(f[1]), to_size(f[2]), f.size() > 3 ? to_size(f[3]) : 1,
                                      f.size() > 4 ? to_size(f[4]) : 0));
    } else if (name == "relu") {
      arity(0, 0);
      out.push_back(LayerSpec::relu());
    } else if (name == "maxpool") {
      arity(1, 1);
      out.push_back(LayerSpec::maxpool(to_size(f[1])));
    } else if (name == "flatten") {
      arity(0, 0);
      out.push_back(LayerSpec::flatten());
    } else {
      throw InvalidArgument("unknown layer '" + std::string(item) + "'");
    }
  }
  return out;
}

std::string format_layers(const std::vector<LayerSpec>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ",";
    switch (l.kind) {
      case LayerKind::Dense: out += "dense:" + std::to_string(l.out); break;
      case LayerKind::Conv2d:
        out += "conv:" + std::to_string(l.out) + ":" + std::to_string(l.kernel) + ":" + std::to_string(l.stride) +
               ":" + std::to_string(l.padding);
        break;
      case LayerKind::Relu: out += "relu"; break;
      case LayerKind::MaxPool: out += "maxpool:" + std::to_string(l.kernel); break;
      case LayerKind::Flatten: out += "flatten"; break;
    }
  }
  return out;
}

std::vector<std::size_t> parse_order(std::string_view text) {
  std::vector<std::size_t> order;
  for (auto item : split(text, ',')) order.push_back(to_size(item));
  return TaskOrder::explicit_list(std::move(order)).permutation;
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig cfg;
  ExperimentConfig& e = cfg.experiment;
  DataConfig& d = cfg.data;
  bool gamma_set = false;

  using Setter = std::function<void(std::string_view)>;
  const std::map<std::string, Setter, std::less<>> setters = {
      {"dataset",
       [&](std::string_view v) {
         if (v == "synthetic") d.source = DatasetSource::Synthetic;
         else if (v == "file") d.source = DatasetSource::File;
         else throw InvalidArgument("dataset must be synthetic or file");
       }},
      {"classes", [&](std::string_view v) { d.synthetic.classes = to_size(v); }},
      {"dims", [&](std::string_view v) { d.synthetic.dims = to_size(v); }},
      {"samples_per_class", [&](std::string_view v) { d.synthetic.samples_per_class = to_size(v); }},
      {"noise", [&](std::string_view v) { d.synthetic.noise = to_double(v); }},
      {"test_fraction", [&](std::string_view v) { d.synthetic.test_fraction = to_double(v); }},
      {"data_seed", [&](std::string_view v) { d.synthetic.seed = to_size(v); }},
      {"data_path", [&](std::string_view v) { d.path = std::string(v); }},
      {"tasks", [&](std::string_view v) { d.tasks = to_size(v); }},
      {"task_kind",
       [&](std::string_view v) {
         if (v == "permuted") d.kind = TaskKind::Permuted;
         else if (v == "split") d.kind = TaskKind::Split;
         else throw InvalidArgument("task_kind must be permuted or split");
       }},
      {"classes_per_task", [&](std::string_view v) { d.classes_per_task = to_size(v); }},
      {"order", [&](std::string_view v) { d.order = parse_order(v); }},
      {"order_seed", [&](std::string_view v) { d.order_seed = static_cast<std::uint32_t>(to_size(v)); }},
      {"input", [&](std::string_view v) { e.arch.input = parse_shape(v); }},
      {"layers", [&](std::string_view v) { e.arch.trunk = parse_layers(v); }},
      {"epochs", [&](std::string_view v) { e.epochs = to_size(v); }},
      {"warmup_epochs", [&](std::string_view v) { e.warmup_epochs = to_size(v); }},
      {"alpha", [&](std::string_view v) { e.alpha = to_double(v); }},
      {"lr", [&](std::string_view v) { e.lr = to_double(v); }},
      {"lambda0", [&](std::string_view v) { e.lambda0 = to_double(v); }},
      {"lambda1", [&](std::string_view v) { e.lambda1 = to_double(v); }},
      {"batch_size", [&](std::string_view v) { e.batch_size = to_size(v); }},
      {"momentum", [&](std::string_view v) { e.momentum = to_double(v); }},
      {"p", [&](std::string_view v) { e.p = to_double(v); }},
      {"prune", [&](std::string_view v) { e.prune.mode = parse_prune_mode(v); }},
      {"prune_tau", [&](std::string_view v) { e.prune.tau = to_double(v); }},
      {"prune_gamma",
       [&](std::string_view v) {
         e.prune.gamma = to_double(v);
         gamma_set = true;
       }},
      {"seed", [&](std::string_view v) { e.seed = to_size(v); }},
      {"mode", [&](std::string_view v) { e.mode = parse_mode(v); }},
  };

  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(source, line_no, "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(source, line_no, "duplicate key '" + std::string(key) + "'");
    }
    if (value.empty()) throw ConfigError(source, line_no, "key '" + std::string(key) + "' has no value");
    try {
      it->second(value);
    } catch (const Error& err) {
      throw ConfigError(source, line_no, std::string(key) + ": " + err.what());
    }
  }

  for (const char* key : {"dataset", "input", "layers"}) {
    if (!seen.contains(key)) throw ConfigError(source, 0, "missing required key '" + std::string(key) + "'");
  }
  if (d.source == DatasetSource::File && d.path.empty()) {
    throw ConfigError(source, 0, "missing required key 'data_path' for dataset = file");
  }
  if (d.order && d.order_seed) throw ConfigError(source, 0, "order and order_seed are mutually exclusive");
  if (!gamma_set) e.prune.gamma = e.p;
  try {
    e.validate();
  } catch (const Error& err) {
    throw ConfigError(source, 0, err.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string config_text(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  const DataConfig& d = cfg.data;
  std::ostringstream os;
  os << "dataset = " << (d.source == DatasetSource::Synthetic ? "synthetic" : "file") << "\n";
  if (d.source == DatasetSource::File) os << "data_path = " << d.path.string() << "\n";
  os << "classes = " << d.synthetic.classes << "\n"
     << "dims = " << d.synthetic.dims << "\n"
     << "samples_per_class = " << d.synthetic.samples_per_class << "\n"
     << "noise = " << fmt(d.synthetic.noise) << "\n"
     << "test_fraction = " << fmt(d.synthetic.test_fraction) << "\n"
     << "data_seed = " << d.synthetic.seed << "\n"
     << "tasks = " << d.tasks << "\n"
     << "task_kind = " << (d.kind == TaskKind::Permuted ? "permuted" : "split") << "\n"
     << "classes_per_task = " << d.classes_per_task << "\n";
  if (d.order) os << "order = " << join(*d.order) << "\n";
  if (d.order_seed) os << "order_seed = " << *d.order_seed << "\n";
  os << "input = " << format_shape(e.arch.input) << "\n"
     << "layers = " << format_layers(e.arch.trunk) << "\n"
     << "epochs = " << e.epochs << "\n"
     << "warmup_epochs = " << e.warmup_epochs << "\n"
     << "alpha = " << fmt(e.alpha) << "\n"
     << "lr = " << fmt(e.lr) << "\n"
     << "lambda0 = " << fmt(e.lambda0) << "\n"
     << "lambda1 = " << fmt(e.lambda1) << "\n"
     << "batch_size = " << e.batch_size << "\n"
     << "momentum = " << fmt(e.momentum) << "\n"
     << "p = " << fmt(e.p) << "\n"
     << "prune = " << to_string(e.prune.mode) << "\n"
     << "prune_tau = " << fmt(e.prune.tau) << "\n"
     << "prune_gamma = " << fmt(e.prune.gamma) << "\n"
     << "seed = " << e.seed << "\n"
     << "mode = " << to_string(e.mode) << "\n";
  return os.str();
}

std::vector<TaskDataset> build_tasks(const DataConfig& d) {
  TaskDataset pool;
  if (d.source == DatasetSource::Synthetic) {
    pool = gen_synthetic(d.synthetic);
  } else {
    const LabeledPool raw = d.path.extension() == ".csv" ? load_csv(d.path) : load_dataset(d.path);
    pool = split_pool(raw, d.synthetic.test_fraction, d.synthetic.seed);
  }

  std::size_t count = d.tasks;
  if (d.kind == TaskKind::Split) {
    if (d.classes_per_task == 0) throw InvalidArgument("classes_per_task must be positive");
    count = pool.class_count / d.classes_per_task;
  }
  TaskOrder order = TaskOrder::identity(count);
  if (d.order) order = TaskOrder::explicit_list(*d.order);
  else if (d.order_seed) order = TaskOrder::seeded(count, *d.order_seed);
  if (order.permutation.size() != count) {
    throw InvalidArgument("order has " + std::to_string(order.permutation.size()) + " entries for " +
                          std::to_string(count) + " tasks");
  }

  if (d.kind == TaskKind::Split) return gen_split(pool, d.classes_per_task, order);
  auto canonical = gen_permuted(pool, count, d.synthetic.seed);
  std::vector<TaskDataset> out;
  for (std::size_t t : order.permutation) out.push_back(canonical[t]);
  return out;
}

}  // namespace halrp
