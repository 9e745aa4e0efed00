#include "halrp/tasks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "halrp/error.hpp"
#include "halrp/random.hpp"

namespace halrp {

namespace {

double to_float_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

Batch permute_features(const Batch& b, const std::vector<std::size_t>& perm) {
  Batch out = b;
  for (std::size_t n = 0; n < b.inputs.rows(); ++n) {
    auto src = b.inputs.row(n);
    auto dst = out.inputs.row(n);
    for (std::size_t f = 0; f < perm.size(); ++f) dst[f] = src[perm[f]];
  }
  return out;
}

Batch select_classes(const Batch& b, std::size_t first, std::size_t count) {
  std::vector<std::size_t> rows;
  for (std::size_t n = 0; n < b.size(); ++n)
    if (b.labels[n] >= first && b.labels[n] < first + count) rows.push_back(n);
  Batch out = b.subset(rows);
  for (auto& y : out.labels) y -= static_cast<std::uint32_t>(first);
  return out;
}

}  // namespace

TaskOrder TaskOrder::seeded(std::size_t tasks, std::uint32_t seed) { return {legacy_permutation(tasks, seed)}; }

TaskOrder TaskOrder::explicit_list(std::vector<std::size_t> order) {
  std::vector<bool> seen(order.size(), false);
  for (auto t : order) {
    if (t >= order.size() || seen[t]) throw InvalidArgument("task order is not a permutation of [0, T)");
    seen[t] = true;
  }
  return {std::move(order)};
}

TaskOrder TaskOrder::identity(std::size_t tasks) {
  TaskOrder o;
  o.permutation.resize(tasks);
  std::iota(o.permutation.begin(), o.permutation.end(), std::size_t{0});
  return o;
}

std::vector<TaskDataset> gen_permuted(const TaskDataset& base, std::size_t tasks, std::uint64_t seed) {
  if (tasks == 0) throw InvalidArgument("gen_permuted: need at least one task");
  std::vector<TaskDataset> out;
  out.push_back(base);
  out.back().task_id = 0;
  const std::size_t dims = base.train.inputs.cols();
  for (std::size_t t = 1; t < tasks; ++t) {
    std::vector<std::size_t> perm(dims);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(mix_seed(seed, t));
    rng.shuffle(std::span<std::size_t>(perm));
    TaskDataset d;
    d.train = permute_features(base.train, perm);
    d.test = permute_features(base.test, perm);
    d.class_count = base.class_count;
    d.task_id = static_cast<int>(t);
    d.provenance = base.provenance + "|permuted(seed=" + std::to_string(seed) + ",task=" + std::to_string(t) + ")";
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<TaskDataset> gen_split(const TaskDataset& pool, std::size_t classes_per_task, const TaskOrder& order) {
  if (classes_per_task == 0 || pool.class_count % classes_per_task != 0) {
    throw InvalidArgument("gen_split: " + std::to_string(pool.class_count) + " classes are not divisible into groups of " +
                          std::to_string(classes_per_task));
  }
  const std::size_t groups = pool.class_count / classes_per_task;
  if (order.permutation.size() != groups) {
    throw InvalidArgument("gen_split: order has " + std::to_string(order.permutation.size()) + " entries for " +
                          std::to_string(groups) + " groups");
  }
  std::vector<TaskDataset> out;
  for (std::size_t g : order.permutation) {
    TaskDataset d;
    d.train = select_classes(pool.train, g * classes_per_task, classes_per_task);
    d.test = select_classes(pool.test, g * classes_per_task, classes_per_task);
    d.class_count = classes_per_task;
    d.task_id = static_cast<int>(g);
    d.provenance = pool.provenance + "|split(group=" + std::to_string(g) + ")";
    out.push_back(std::move(d));
  }
  return out;
}

TaskDataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes == 0 || spec.dims == 0 || spec.samples_per_class == 0) {
    throw InvalidArgument("gen_synthetic: classes, dims and samples_per_class must be positive");
  }
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    throw InvalidArgument("gen_synthetic: test_fraction must lie in [0, 1)");
  }
  Rng rng(spec.seed);
  Matrix prototypes(spec.classes, spec.dims);
  for (double& v : prototypes.data()) v = rng.uniform();

  const auto test_per_class =
      static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(spec.samples_per_class)));
  const std::size_t train_per_class = spec.samples_per_class - test_per_class;

  auto draw = [&](std::size_t per_class) {
    Batch b;
    b.inputs = Matrix(per_class * spec.classes, spec.dims);
    b.labels.resize(per_class * spec.classes);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t n = 0; n < per_class; ++n, ++row) {
        b.labels[row] = static_cast<std::uint32_t>(c);
        for (std::size_t f = 0; f < spec.dims; ++f) {
          const double x = prototypes(c, f) + (spec.noise > 0.0 ? spec.noise * rng.normal() : 0.0);
          b.inputs(row, f) = to_float_precision(std::clamp(x, 0.0, 1.0));
        }
      }
    }
    std::vector<std::size_t> order(b.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    return b.subset(order);
  };

  TaskDataset d;
  d.train = draw(train_per_class);
  d.test = draw(test_per_class);
  d.class_count = spec.classes;
  d.task_id = 0;
  std::ostringstream prov;
  prov << "synthetic(classes=" << spec.classes << ",dims=" << spec.dims << ",samples=" << spec.samples_per_class
       << ",noise=" << spec.noise << ",seed=" << spec.seed << ")";
  d.provenance = prov.str();
  return d;
}

namespace {

constexpr std::string_view kDatasetMagic = "HDSET1";

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::size_t parse_header_value(const std::string& line, std::string_view key, std::size_t line_no) {
  const std::string prefix = std::string(key) + "=";
  if (line.rfind(prefix, 0) != 0) {
    throw FormatError("dataset header line " + std::to_string(line_no) + ": expected '" + prefix + "<n>', got '" +
                      line + "'");
  }
  const std::string digits = line.substr(prefix.size());
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw FormatError("dataset header line " + std::to_string(line_no) + ": '" + digits + "' is not a count");
  }
  return static_cast<std::size_t>(std::stoull(digits));
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const LabeledPool& pool) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const std::size_t dims = pool.data.inputs.cols();
  os << kDatasetMagic << "\n"
     << "count=" << pool.data.size() << "\n"
     << "dims=" << dims << "\n"
     << "classes=" << pool.classes << "\n\n";
  for (std::size_t n = 0; n < pool.data.size(); ++n) {
    for (double v : pool.data.inputs.row(n)) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    put_u32(os, pool.data.labels[n]);
  }
  if (!os) throw Error("write failed for " + path.string());
}

LabeledPool load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kDatasetMagic) {
    throw FormatError("dataset line 1: missing magic '" + std::string(kDatasetMagic) + "'");
  }
  std::size_t values[3] = {0, 0, 0};
  const std::string_view keys[3] = {"count", "dims", "classes"};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!std::getline(is, line)) throw FormatError("dataset line " + std::to_string(k + 2) + ": truncated header");
    values[k] = parse_header_value(line, keys[k], k + 2);
  }
  if (!std::getline(is, line) || !line.empty()) throw FormatError("dataset line 5: expected blank line after header");
  const std::size_t count = values[0];
  const std::size_t dims = values[1];
  LabeledPool pool;
  pool.classes = values[2];
  if (dims == 0) throw FormatError("dataset header: dims must be positive");

  const std::size_t record = 4 * (dims + 1);
  std::vector<unsigned char> buf(record);
  pool.data.inputs = Matrix(count, dims);
  pool.data.labels.resize(count);
  for (std::size_t n = 0; n < count; ++n) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record))) {
      throw FormatError("dataset payload truncated at record " + std::to_string(n) + " of " + std::to_string(count));
    }
    for (std::size_t f = 0; f < dims; ++f) {
      pool.data.inputs(n, f) = static_cast<double>(std::bit_cast<float>(get_u32(buf.data() + 4 * f)));
    }
    const std::uint32_t label = get_u32(buf.data() + 4 * dims);
    if (label >= pool.classes) {
      throw FormatError("dataset record " + std::to_string(n) + ": label " + std::to_string(label) + " >= classes");
    }
    pool.data.labels[n] = label;
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("dataset has trailing bytes after the payload");
  return pool;
}

LabeledPool load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::vector<double> values;
  std::vector<std::uint32_t> labels;
  std::size_t dims = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    long label = -1;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        if (first) {
          label = std::stol(cell, &used);
        } else {
          row.push_back(to_float_precision(std::stod(cell, &used)));
        }
        if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError("csv line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
      }
      first = false;
    }
    if (label < 0) throw FormatError("csv line " + std::to_string(line_no) + ": negative or missing label");
    if (dims == 0) dims = row.size();
    if (row.empty() || row.size() != dims) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(dims) + " features");
    }
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(static_cast<std::uint32_t>(label));
  }
  if (labels.empty()) throw FormatError("csv file has no rows");
  LabeledPool pool;
  pool.data.inputs = Matrix(labels.size(), dims, std::move(values));
  pool.data.labels = std::move(labels);
  pool.classes = *std::max_element(pool.data.labels.begin(), pool.data.labels.end()) + 1;
  return pool;
}

TaskDataset split_pool(const LabeledPool& pool, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidArgument("split_pool: test_fraction in [0, 1)");
  Rng rng(seed);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t c = 0; c < pool.classes; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t n = 0; n < pool.data.size(); ++n)
      if (pool.data.labels[n] == c) rows.push_back(n);
    rng.shuffle(std::span<std::size_t>(rows));
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  TaskDataset d;
  d.train = pool.data.subset(train_rows);
  d.test = pool.data.subset(test_rows);
  d.class_count = pool.classes;
  d.provenance = "file(seed=" + std::to_string(seed) + ")";
  return d;
}

}  // namespace halrp
