#include "halrp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "halrp/error.hpp"

namespace halrp {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'L', 'R', 'P', '0', '1', '\0'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void vec(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double x : m.data()) f64(x);
  }
  void tensor(const Tensor4& t) {
    u64(t.out());
    u64(t.in());
    u64(t.kernel());
    for (double x : t.data()) f64(x);
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int b = 0; b < n; ++b) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t count(std::size_t elem_bytes) {
    const std::uint64_t n = u64();
    if (elem_bytes && n > (size_ - pos_) / elem_bytes) fail("length field exceeds the remaining data");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  Vector vec() {
    Vector v(count(8));
    for (double& x : v) x = f64();
    return v;
  }
  Matrix matrix() {
    const std::size_t r = count(0);
    const std::size_t c = count(0);
    if (c && r > (size_ - pos_) / 8 / c) fail("matrix larger than the remaining data");
    Matrix m(r, c);
    for (double& x : m.data()) x = f64();
    return m;
  }
  Tensor4 tensor() {
    const std::size_t j = count(0), i = count(0), d = count(0);
    if (j * i * d * d > (size_ - pos_) / 8) fail("tensor larger than the remaining data");
    Tensor4 t(j, i, d);
    for (double& x : t.data()) x = f64();
    return t;
  }
  void raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == size_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("checkpoint: " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) fail("truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b) v |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_head(Writer& w, const Head& h) {
  w.matrix(h.weight);
  w.vec(h.bias);
}

Head read_head(Reader& r) {
  Head h;
  h.weight = r.matrix();
  h.bias = r.vec();
  return h;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const ContinualState& s = ckpt.state;
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(config_text(RunConfig{s.config, ckpt.data}));
  w.u32(s.config.record_timing ? 1 : 0);

  const auto& params = s.base.params();
  w.u64(params.size());
  for (const auto& p : params) {
    w.tensor(p.weight);
    w.vec(p.bias);
  }
  w.u64(s.base.heads().size());
  for (const auto& [task, head] : s.base.heads()) {
    w.i64(task);
    write_head(w, head);
  }

  w.u64(s.tasks.size());
  for (std::size_t t = 0; t < s.tasks.size(); ++t) {
    const TaskPrivateParams& p = s.tasks[t];
    w.i64(p.task_id);
    w.i64(s.canonical_ids.at(t));
    w.u64(p.layers.size());
    for (const auto& l : p.layers) {
      w.u64(l.layer_index);
      w.u64(l.k());
      w.vec(l.r);
      w.vec(l.s);
      w.matrix(l.low_rank.u);
      w.vec(l.low_rank.sigma);
      w.matrix(l.low_rank.v);
    }
    w.u64(p.biases.size());
    for (const auto& b : p.biases) w.vec(b);
    write_head(w, p.head);
    w.u64(p.own_weights.size());
    for (const auto& t4 : p.own_weights) w.tensor(t4);
  }

  const AccuracyMatrix& a = s.history;
  w.u64(a.tasks());
  for (std::size_t i = 0; i < a.tasks(); ++i) {
    for (std::size_t j = 0; j < a.tasks(); ++j) {
      const bool def = a.defined(i, j);
      w.u32(def ? 1 : 0);
      w.f64(def ? a.at(i, j) : 0.0);
    }
  }
  w.u64(s.warnings.size());
  for (const auto& msg : s.warnings) w.str(msg);

  auto& bytes = w.bytes();
  w.u64(fnv1a64(bytes.data(), bytes.size()));
  return std::move(bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 12) throw FormatError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError("checkpoint: bad magic");
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes.data() + body, 8);
  const std::uint64_t stored = tail.u64();
  if (stored != fnv1a64(bytes.data(), body)) throw ChecksumError("checkpoint: checksum mismatch");

  Reader r(bytes.data(), body);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }

  Checkpoint ckpt;
  RunConfig cfg = parse_config(r.str(), "<checkpoint config>");
  ckpt.data = cfg.data;
  ContinualState& s = ckpt.state;
  s.config = cfg.experiment;
  s.config.record_timing = r.u32() != 0;

  s.base = Network(s.config.arch.input, s.config.arch.trunk);
  auto& params = s.base.params();
  if (r.u64() != params.size()) r.fail("layer count does not match the architecture");
  for (auto& p : params) {
    Tensor4 weight = r.tensor();
    if (!weight.same_shape(p.weight)) r.fail("layer shape does not match the architecture");
    p.weight = std::move(weight);
    p.bias = r.vec();
    if (p.bias.size() != p.weight.out()) r.fail("bias length does not match the layer");
  }
  const std::size_t heads = r.count(0);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto task = static_cast<int>(r.i64());
    s.base.heads()[task] = read_head(r);
  }

  const std::size_t tasks = r.count(0);
  for (std::size_t t = 0; t < tasks; ++t) {
    TaskPrivateParams p;
    p.task_id = static_cast<int>(r.i64());
    s.canonical_ids.push_back(static_cast<int>(r.i64()));
    const std::size_t layers = r.count(0);
    for (std::size_t l = 0; l < layers; ++l) {
      TaskLayerParams lp;
      lp.layer_index = r.u64();
      const std::size_t k = r.u64();
      lp.r = r.vec();
      lp.s = r.vec();
      lp.low_rank.u = r.matrix();
      lp.low_rank.sigma = r.vec();
      lp.low_rank.v = r.matrix();
      if (lp.layer_index >= params.size()) r.fail("task layer index out of range");
      const Tensor4& w = params[lp.layer_index].weight;
      if (lp.k() != k || lp.r.size() != w.out() || lp.s.size() != w.in() || lp.low_rank.u.rows() != w.out() ||
          lp.low_rank.u.cols() != k || lp.low_rank.v.rows() != w.in() || lp.low_rank.v.cols() != k) {
        r.fail("task layer shapes do not match the base layer");
      }
      p.layers.push_back(std::move(lp));
    }
    const std::size_t biases = r.count(0);
    for (std::size_t b = 0; b < biases; ++b) p.biases.push_back(r.vec());
    p.head = read_head(r);
    const std::size_t own = r.count(0);
    for (std::size_t o = 0; o < own; ++o) p.own_weights.push_back(r.tensor());
    s.tasks.push_back(std::move(p));
  }

  const std::size_t n = r.count(0);
  s.history = AccuracyMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool def = r.u32() != 0;
      const double v = r.f64();
      if (def) s.history.set(i, j, v);
    }
  }
  const std::size_t warnings = r.count(0);
  for (std::size_t w = 0; w < warnings; ++w) s.warnings.push_back(r.str());
  if (!r.done()) r.fail("trailing bytes before the checksum");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace halrp
