#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halrp/perturb.hpp"
#include "halrp/reg_prune.hpp"
#include "halrp/tensor.hpp"

namespace halrp {

enum class LayerKind { Dense, Conv2d, Relu, MaxPool, Flatten };

std::string_view to_string(LayerKind kind);

/// Activation shape of one sample, stored CHW-flattened.
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * height * width; }
  bool flat() const noexcept { return height == 1 && width == 1; }
  bool operator==(const Shape&) const = default;
};

/// One trunk layer. `out` is the dense output width or the conv output
/// channel count; `kernel` doubles as the max-pool window (stride = window).
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  static LayerSpec dense(std::size_t out) { return {LayerKind::Dense, out, 1, 1, 0}; }
  static LayerSpec conv2d(std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0) {
    return {LayerKind::Conv2d, out_channels, kernel, stride, padding};
  }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 1, 1, 0}; }
  static LayerSpec maxpool(std::size_t window) { return {LayerKind::MaxPool, 0, window, window, 0}; }
  static LayerSpec flatten() { return {LayerKind::Flatten, 0, 1, 1, 0}; }

  bool parametric() const noexcept { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
  bool operator==(const LayerSpec&) const = default;
};

/// Weights of a dense or conv layer. When `perturbation` is set, `weight`
/// is the frozen base and the effective weights are the reparameterized
/// ones; only the perturbation and the bias are trainable.
struct ParamLayer {
  Tensor4 weight;
  Vector bias;
  std::optional<TaskLayerParams> perturbation;

  Tensor4 effective_weight() const;
  bool operator==(const ParamLayer&) const = default;
};

struct Batch {
  Matrix inputs;  // N x features, values in [0, 1]
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  Batch subset(std::span<const std::size_t> rows) const;
  bool operator==(const Batch&) const = default;
};

/// Feed-forward trunk shared by all tasks plus one classifier head per task.
class Network {
 public:
  Network() = default;
  /// Validates that the layers chain and allocates zero parameters.
  Network(Shape input, std::vector<LayerSpec> trunk);

  /// Glorot-uniform trunk weights, zero biases.
  void initialize(std::uint64_t seed);
  /// Adds (or replaces) a Glorot-initialized head for `task`.
  void add_head(int task, std::size_t classes, std::uint64_t seed);

  const Shape& input_shape() const noexcept { return input_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  /// Input shape of trunk layer `l`; index layers().size() is the feature shape.
  const Shape& shape_at(std::size_t l) const { return shapes_.at(l); }
  std::size_t feature_size() const { return shapes_.back().size(); }

  std::vector<ParamLayer>& params() noexcept { return params_; }
  const std::vector<ParamLayer>& params() const noexcept { return params_; }
  /// Trunk layer index of parametric layer `p`.
  std::size_t layer_of_param(std::size_t p) const { return param_layer_.at(p); }

  std::map<int, Head>& heads() noexcept { return heads_; }
  const std::map<int, Head>& heads() const noexcept { return heads_; }
  const Head& head(int task) const;

  bool operator==(const Network&) const = default;

 private:
  Shape input_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::vector<ParamLayer> params_;
  std::vector<std::size_t> param_layer_;
  std::map<int, Head> heads_;
};

/// Gradient of one parametric layer. `weight` is always dL/dW of the
/// effective weights; `perturbation` carries the chain-ruled gradients
/// of r, s, U, sigma, V when the layer is reparameterized.
struct LayerGrad {
  Tensor4 weight;
  Vector bias;
  std::optional<TaskLayerParams> perturbation;
};

struct Gradients {
  std::vector<LayerGrad> layers;
  Head head;
  std::vector<double> weight_norms;  // L2 norm of each flattened layers[l].weight
};

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

Matrix forward(const Network& net, int task, const Matrix& inputs);

/// Mean softmax cross-entropy.
double loss(const Matrix& logits, std::span<const std::uint32_t> labels);

/// Loss and gradients of `loss_scale` times the mean cross-entropy.
BackwardResult backward(const Network& net, int task, const Batch& batch, double loss_scale = 1.0);

struct TrainOptions {
  std::size_t epochs = 0;
  double lr = 1e-3;
  std::size_t batch_size = 128;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::optional<RegCoefficients> reg;
};

/// Mini-batch SGD. Reparameterized layers keep their base frozen. Throws
/// DivergenceError when a batch loss is not finite.
Network train(Network net, int task, const Batch& data, const TrainOptions& options);

std::vector<std::uint32_t> predict_labels(const Network& net, int task, const Matrix& inputs);
double accuracy(const Network& net, int task, const Batch& data);

/// Same network with every perturbed layer replaced by its reconstructed weights.
Network materialize(const Network& net);

/// Sum of the regularizer over every reparameterized layer.
double network_reg_loss(const Network& net, const RegCoefficients& c);

}  // namespace halrp
