#include "halrp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "halrp/error.hpp"
#include "halrp/kernels.hpp"
#include "halrp/random.hpp"

namespace halrp {

using kernels::Trans;

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

Tensor4 ParamLayer::effective_weight() const {
  return perturbation ? reconstruct_weights(weight, *perturbation) : weight;
}

Batch Batch::subset(std::span<const std::size_t> rows) const {
  Batch b;
  b.inputs = Matrix(rows.size(), inputs.cols());
  b.labels.resize(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    auto src = inputs.row(rows[n]);
    std::copy(src.begin(), src.end(), b.inputs.row(n).begin());
    b.labels[n] = labels[rows[n]];
  }
  return b;
}

namespace {

kernels::ConvGeometry geometry(const Shape& in, const LayerSpec& spec) {
  return {in.channels, in.height, in.width, spec.kernel, spec.stride, spec.padding};
}

void glorot(std::span<double> values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : values) w = rng.uniform(-limit, limit);
}

}  // namespace

Network::Network(Shape input, std::vector<LayerSpec> trunk) : input_(input), layers_(std::move(trunk)) {
  if (input_.size() == 0) throw ShapeError("network input shape is empty");
  shapes_.push_back(input_);
  Shape cur = input_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& spec = layers_[l];
    const std::string where = "layer " + std::to_string(l) + " (" + std::string(to_string(spec.kind)) + ")";
    switch (spec.kind) {
      case LayerKind::Dense: {
        if (!cur.flat()) throw ShapeError(where + ": dense input must be flattened first");
        if (spec.out == 0) throw ShapeError(where + ": zero output width");
        params_.push_back({Tensor4(spec.out, cur.size(), 1), Vector(spec.out, 0.0), std::nullopt});
        param_layer_.push_back(l);
        cur = {spec.out, 1, 1};
        break;
      }
      case LayerKind::Conv2d: {
        if (spec.out == 0 || spec.kernel == 0 || spec.stride == 0) throw ShapeError(where + ": invalid geometry");
        if (cur.height + 2 * spec.padding < spec.kernel || cur.width + 2 * spec.padding < spec.kernel) {
          throw ShapeError(where + ": kernel larger than padded input");
        }
        const auto g = geometry(cur, spec);
        params_.push_back({Tensor4(spec.out, cur.channels, spec.kernel), Vector(spec.out, 0.0), std::nullopt});
        param_layer_.push_back(l);
        cur = {spec.out, g.out_height(), g.out_width()};
        break;
      }
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool: {
        if (spec.kernel == 0 || cur.height < spec.kernel || cur.width < spec.kernel) {
          throw ShapeError(where + ": pooling window does not fit");
        }
        cur = {cur.channels, cur.height / spec.kernel, cur.width / spec.kernel};
        break;
      }
      case LayerKind::Flatten:
        cur = {cur.size(), 1, 1};
        break;
    }
    shapes_.push_back(cur);
  }
  if (!shapes_.back().flat()) throw ShapeError("network trunk must end flattened");
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) {
    const std::size_t k2 = p.weight.spatial();
    glorot(p.weight.data(), p.weight.in() * k2, p.weight.out() * k2, rng);
    std::fill(p.bias.begin(), p.bias.end(), 0.0);
    p.perturbation.reset();
  }
}

void Network::add_head(int task, std::size_t classes, std::uint64_t seed) {
  if (classes == 0) throw InvalidArgument("head needs at least one class");
  Rng rng(seed);
  Head h{Matrix(classes, feature_size()), Vector(classes, 0.0)};
  glorot(h.weight.data(), feature_size(), classes, rng);
  heads_[task] = std::move(h);
}

const Head& Network::head(int task) const {
  auto it = heads_.find(task);
  if (it == heads_.end()) throw InvalidArgument("no classifier head for task " + std::to_string(task));
  return it->second;
}

namespace {

struct LayerCache {
  Matrix input;          // dense input, or conv im2col patches
  Matrix output;         // relu output
  std::vector<std::size_t> argmax;  // maxpool source index per output entry
  Tensor4 weight;        // effective weights used
};

Matrix dense_forward(const Matrix& x, const Tensor4& w, const Vector& b) {
  Matrix y = kernels::gemm(x, Trans::No, w.as_matrix(), Trans::Yes);
  for (std::size_t n = 0; n < y.rows(); ++n) {
    auto row = y.row(n);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
  return y;
}

Matrix conv_forward(const Matrix& cols, std::size_t batch, std::size_t positions, const Tensor4& w,
                    const Vector& b) {
  const Matrix rows = kernels::gemm(cols, Trans::No, w.as_matrix(), Trans::Yes);  // (N*P) x J
  const std::size_t out_ch = w.out();
  Matrix y(batch, out_ch * positions);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t pos = 0; pos < positions; ++pos)
      for (std::size_t j = 0; j < out_ch; ++j) y(n, j * positions + pos) = rows(n * positions + pos, j) + b[j];
  return y;
}

Matrix maxpool_forward(const Matrix& x, const Shape& in, std::size_t window, std::vector<std::size_t>* argmax) {
  const std::size_t oh = in.height / window;
  const std::size_t ow = in.width / window;
  Matrix y(x.rows(), in.channels * oh * ow);
  if (argmax) argmax->assign(y.size(), 0);
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto src = x.row(n);
    for (std::size_t c = 0; c < in.channels; ++c) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = (c * in.height + oy * window) * in.width + ox * window;
          for (std::size_t p = 0; p < window; ++p) {
            for (std::size_t q = 0; q < window; ++q) {
              const std::size_t idx = (c * in.height + oy * window + p) * in.width + ox * window + q;
              if (src[idx] > src[best]) best = idx;
            }
          }
          const std::size_t o = (c * oh + oy) * ow + ox;
          y(n, o) = src[best];
          if (argmax) (*argmax)[n * y.cols() + o] = best;
        }
      }
    }
  }
  return y;
}

// Runs the trunk; fills caches when requested. Returns the feature matrix.
Matrix trunk_forward(const Network& net, const Matrix& inputs, std::vector<LayerCache>* caches) {
  if (inputs.cols() != net.input_shape().size()) {
    throw ShapeError("input width " + std::to_string(inputs.cols()) + " != network input size " +
                     std::to_string(net.input_shape().size()));
  }
  if (caches) caches->assign(net.layers().size(), LayerCache{});
  Matrix x = inputs;
  std::size_t p = 0;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const LayerSpec& spec = net.layers()[l];
    const Shape& in = net.shape_at(l);
    switch (spec.kind) {
      case LayerKind::Dense: {
        const ParamLayer& layer = net.params()[p++];
        Tensor4 w = layer.effective_weight();
        Matrix y = dense_forward(x, w, layer.bias);
        if (caches) {
          (*caches)[l].input = std::move(x);
          (*caches)[l].weight = std::move(w);
        }
        x = std::move(y);
        break;
      }
      case LayerKind::Conv2d: {
        const ParamLayer& layer = net.params()[p++];
        Tensor4 w = layer.effective_weight();
        const auto g = geometry(in, spec);
        Matrix cols = kernels::im2col(x, g);
        Matrix y = conv_forward(cols, x.rows(), g.positions(), w, layer.bias);
        if (caches) {
          (*caches)[l].input = std::move(cols);
          (*caches)[l].weight = std::move(w);
        }
        x = std::move(y);
        break;
      }
      case LayerKind::Relu: {
        for (double& v : x.data()) v = v > 0.0 ? v : 0.0;
        if (caches) (*caches)[l].output = x;
        break;
      }
      case LayerKind::MaxPool: {
        x = maxpool_forward(x, in, spec.kernel, caches ? &(*caches)[l].argmax : nullptr);
        break;
      }
      case LayerKind::Flatten:
        break;
    }
  }
  return x;
}

Matrix head_forward(const Head& h, const Matrix& features) {
  Matrix y = kernels::gemm(features, Trans::No, h.weight, Trans::Yes);
  for (std::size_t n = 0; n < y.rows(); ++n) {
    auto row = y.row(n);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += h.bias[c];
  }
  return y;
}

void check_labels(const Head& h, std::span<const std::uint32_t> labels, std::size_t rows) {
  if (labels.size() != rows) throw ShapeError("label count does not match batch rows");
  for (auto y : labels) {
    if (y >= h.weight.rows()) {
      throw InvalidArgument("label " + std::to_string(y) + " outside head with " + std::to_string(h.weight.rows()) +
                            " classes");
    }
  }
}

// Chain rule from dL/dW_eff to the reparameterization.
TaskLayerParams perturbation_grad(const Tensor4& base, const TaskLayerParams& p, const Tensor4& g) {
  const std::size_t out = base.out();
  const std::size_t in = base.in();
  const std::size_t k = p.k();
  TaskLayerParams d;
  d.layer_index = p.layer_index;
  d.r.assign(out, 0.0);
  d.s.assign(in, 0.0);
  Matrix gb(out, in);
  for (std::size_t j = 0; j < out; ++j) {
    for (std::size_t i = 0; i < in; ++i) {
      double sum_g = 0.0;
      double sum_gw = 0.0;
      for (std::size_t pq = 0; pq < base.spatial(); ++pq) {
        sum_g += g.at(j, i, pq);
        sum_gw += g.at(j, i, pq) * base.at(j, i, pq);
      }
      gb(j, i) = sum_g;
      d.r[j] += sum_gw * p.s[i];
      d.s[i] += sum_gw * p.r[j];
    }
  }
  const auto& u = p.low_rank.u;
  const auto& v = p.low_rank.v;
  d.low_rank.u = Matrix(out, k);
  d.low_rank.v = Matrix(in, k);
  d.low_rank.sigma.assign(k, 0.0);
  if (k == 0) return d;
  const Matrix gv = kernels::gemm(gb, Trans::No, v, Trans::No);   // J x k
  const Matrix gtu = kernels::gemm(gb, Trans::Yes, u, Trans::No); // I x k
  for (std::size_t c = 0; c < k; ++c) {
    const double sc = p.low_rank.sigma[c];
    double ds = 0.0;
    for (std::size_t j = 0; j < out; ++j) {
      d.low_rank.u(j, c) = gv(j, c) * sc;
      ds += u(j, c) * gv(j, c);
    }
    for (std::size_t i = 0; i < in; ++i) d.low_rank.v(i, c) = gtu(i, c) * sc;
    d.low_rank.sigma[c] = ds;
  }
  return d;
}

}  // namespace

Matrix forward(const Network& net, int task, const Matrix& inputs) {
  const Head& h = net.head(task);
  return head_forward(h, trunk_forward(net, inputs, nullptr));
}

double loss(const Matrix& logits, std::span<const std::uint32_t> labels) {
  if (labels.size() != logits.rows()) throw ShapeError("label count does not match logits rows");
  if (logits.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    auto row = logits.row(n);
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - peak);
    total += std::log(z) + peak - row[labels[n]];
  }
  return total / static_cast<double>(logits.rows());
}

BackwardResult backward(const Network& net, int task, const Batch& batch, double loss_scale) {
  const Head& h = net.head(task);
  check_labels(h, batch.labels, batch.inputs.rows());
  std::vector<LayerCache> caches;
  const Matrix features = trunk_forward(net, batch.inputs, &caches);
  const Matrix logits = head_forward(h, features);

  BackwardResult result;
  result.loss = loss(logits, batch.labels);

  const std::size_t n_rows = logits.rows();
  const double scale = loss_scale / static_cast<double>(std::max<std::size_t>(n_rows, 1));
  Matrix dlogits(n_rows, logits.cols());
  for (std::size_t n = 0; n < n_rows; ++n) {
    auto row = logits.row(n);
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - peak);
    for (std::size_t c = 0; c < row.size(); ++c) dlogits(n, c) = std::exp(row[c] - peak) / z * scale;
    dlogits(n, batch.labels[n]) -= scale;
  }

  Gradients& g = result.grads;
  g.head.weight = kernels::gemm(dlogits, Trans::Yes, features, Trans::No);
  g.head.bias.assign(logits.cols(), 0.0);
  for (std::size_t n = 0; n < n_rows; ++n)
    for (std::size_t c = 0; c < logits.cols(); ++c) g.head.bias[c] += dlogits(n, c);
  Matrix dx = kernels::gemm(dlogits, Trans::No, h.weight, Trans::No);

  g.layers.resize(net.params().size());
  std::size_t p = net.params().size();
  for (std::size_t l = net.layers().size(); l-- > 0;) {
    const LayerSpec& spec = net.layers()[l];
    const Shape& in = net.shape_at(l);
    LayerCache& cache = caches[l];
    switch (spec.kind) {
      case LayerKind::Dense: {
        LayerGrad& lg = g.layers[--p];
        const Matrix dw = kernels::gemm(dx, Trans::Yes, cache.input, Trans::No);
        lg.weight = Tensor4::from_matrix(dw);
        lg.bias.assign(dx.cols(), 0.0);
        for (std::size_t n = 0; n < dx.rows(); ++n)
          for (std::size_t j = 0; j < dx.cols(); ++j) lg.bias[j] += dx(n, j);
        if (l > 0) dx = kernels::gemm(dx, Trans::No, cache.weight.as_matrix(), Trans::No);
        break;
      }
      case LayerKind::Conv2d: {
        LayerGrad& lg = g.layers[--p];
        const auto geo = geometry(in, spec);
        const std::size_t positions = geo.positions();
        const std::size_t out_ch = spec.out;
        Matrix drows(dx.rows() * positions, out_ch);
        lg.bias.assign(out_ch, 0.0);
        for (std::size_t n = 0; n < dx.rows(); ++n) {
          for (std::size_t j = 0; j < out_ch; ++j) {
            for (std::size_t pos = 0; pos < positions; ++pos) {
              const double v = dx(n, j * positions + pos);
              drows(n * positions + pos, j) = v;
              lg.bias[j] += v;
            }
          }
        }
        const Matrix dw = kernels::gemm(drows, Trans::Yes, cache.input, Trans::No);  // J x (C*d*d)
        lg.weight = Tensor4(out_ch, in.channels, spec.kernel);
        std::copy(dw.data().begin(), dw.data().end(), lg.weight.data().begin());
        if (l > 0) {
          const Matrix dcols = kernels::gemm(drows, Trans::No, cache.weight.as_matrix(), Trans::No);
          dx = kernels::col2im(dcols, dx.rows(), geo);
        }
        break;
      }
      case LayerKind::Relu: {
        auto out = cache.output.data();
        auto d = dx.data();
        for (std::size_t i = 0; i < d.size(); ++i)
          if (out[i] <= 0.0) d[i] = 0.0;
        break;
      }
      case LayerKind::MaxPool: {
        Matrix dprev(dx.rows(), in.size());
        for (std::size_t n = 0; n < dx.rows(); ++n)
          for (std::size_t o = 0; o < dx.cols(); ++o) dprev(n, cache.argmax[n * dx.cols() + o]) += dx(n, o);
        dx = std::move(dprev);
        break;
      }
      case LayerKind::Flatten:
        break;
    }
  }

  g.weight_norms.resize(g.layers.size());
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    g.weight_norms[i] = std::sqrt(squared_norm(g.layers[i].weight.data()));
    const ParamLayer& layer = net.params()[i];
    if (layer.perturbation) {
      g.layers[i].perturbation = perturbation_grad(layer.weight, *layer.perturbation, g.layers[i].weight);
    }
  }
  return result;
}

namespace {

struct Slot {
  std::span<double> value;
  std::span<const double> grad;
};

// Trainable parameter/gradient pairs in a fixed order.
std::vector<Slot> trainable(Network& net, int task, const Gradients& g) {
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    ParamLayer& layer = net.params()[i];
    const LayerGrad& lg = g.layers[i];
    if (layer.perturbation) {
      auto& pp = *layer.perturbation;
      const auto& gp = *lg.perturbation;
      slots.push_back({pp.r, gp.r});
      slots.push_back({pp.s, gp.s});
      slots.push_back({pp.low_rank.u.data(), gp.low_rank.u.data()});
      slots.push_back({pp.low_rank.sigma, gp.low_rank.sigma});
      slots.push_back({pp.low_rank.v.data(), gp.low_rank.v.data()});
    } else {
      slots.push_back({layer.weight.data(), lg.weight.data()});
    }
    slots.push_back({layer.bias, lg.bias});
  }
  Head& h = net.heads().at(task);
  slots.push_back({h.weight.data(), g.head.weight.data()});
  slots.push_back({h.bias, g.head.bias});
  return slots;
}

}  // namespace

double network_reg_loss(const Network& net, const RegCoefficients& c) {
  double total = 0.0;
  for (const auto& layer : net.params())
    if (layer.perturbation) total += reg_loss(std::span<const TaskLayerParams>(&*layer.perturbation, 1), c);
  return total;
}

Network train(Network net, int task, const Batch& data, const TrainOptions& options) {
  if (options.epochs == 0 || data.size() == 0) return net;
  if (options.batch_size == 0) throw InvalidArgument("batch size must be positive");
  net.head(task);
  Rng rng(options.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Vector> velocity;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      const Batch batch = data.subset(std::span<const std::size_t>(order).subspan(start, stop - start));
      BackwardResult br = backward(net, task, batch);
      double total = br.loss;
      if (options.reg) {
        total += network_reg_loss(net, *options.reg);
        for (std::size_t i = 0; i < net.params().size(); ++i) {
          const auto& layer = net.params()[i];
          if (layer.perturbation) add_reg_gradient(*layer.perturbation, *options.reg, *br.grads.layers[i].perturbation);
        }
      }
      if (!std::isfinite(total)) throw DivergenceError(epoch);

      auto slots = trainable(net, task, br.grads);
      if (options.momentum != 0.0 && velocity.empty()) {
        for (const auto& s : slots) velocity.emplace_back(s.value.size(), 0.0);
      }
      for (std::size_t si = 0; si < slots.size(); ++si) {
        auto value = slots[si].value;
        auto grad = slots[si].grad;
        if (options.momentum != 0.0) {
          Vector& vel = velocity[si];
          for (std::size_t n = 0; n < value.size(); ++n) {
            vel[n] = options.momentum * vel[n] + grad[n];
            value[n] -= options.lr * vel[n];
          }
        } else {
          for (std::size_t n = 0; n < value.size(); ++n) value[n] -= options.lr * grad[n];
        }
      }
    }
  }
  return net;
}

std::vector<std::uint32_t> predict_labels(const Network& net, int task, const Matrix& inputs) {
  const Matrix logits = forward(net, task, inputs);
  std::vector<std::uint32_t> labels(logits.rows());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    auto row = logits.row(n);
    labels[n] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

double accuracy(const Network& net, int task, const Batch& data) {
  if (data.size() == 0) return 0.0;
  const auto predicted = predict_labels(net, task, data.inputs);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < predicted.size(); ++n) hits += predicted[n] == data.labels[n] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Network materialize(const Network& net) {
  Network out = net;
  for (auto& layer : out.params()) {
    if (layer.perturbation) {
      layer.weight = layer.effective_weight();
      layer.perturbation.reset();
    }
  }
  return out;
}

}  // namespace halrp
