#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/nn/layers.hpp"
#include "rvsm/parameters.hpp"
#include "rvsm/random.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm::nn {

struct Conv2dSpec {
  std::string name;
  std::size_t in_channels;
  std::size_t out_channels;
};
struct ReluSpec {};
struct MaxPoolSpec {};
struct FlattenSpec {};
struct DenseSpec {
  std::string name;
  std::size_t in_features;
  std::size_t out_features;
};

using LayerSpec = std::variant<Conv2dSpec, ReluSpec, MaxPoolSpec, FlattenSpec, DenseSpec>;

struct LabeledImage {
  Tensor image;  ///< [C, H, W]
  int label = 0;
};

using ImageDataset = std::vector<LabeledImage>;

/// Filter/width knobs of the default architecture; 32 and 128 are the
/// published sizes, smaller values give cheap instances for gradient checks.
struct ArchitectureOptions {
  std::size_t channels = 32;
  std::size_t hidden = 128;
};

/// Glorot-uniform bound for a tensor with the given fans.
inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

/// Sequential CNN over [C,H,W] images ending in logits, trained with softmax
/// cross-entropy.
class Network {
 public:
  using dataset_type = ImageDataset;

  /// Builds parameter tensors for `layers` and fills weights from a seeded
  /// Glorot-uniform draw; biases start at zero.
  Network(std::vector<LayerSpec> layers, Shape input_shape, std::uint64_t seed)
      : layers_(std::move(layers)), input_shape_(std::move(input_shape)), seed_(seed) {
    if (input_shape_.size() != 3) throw InvalidArchitecture("network input must be [C,H,W]");
    Shape shape = input_shape_;
    Rng rng(seed);
    std::vector<LayerParameters> params;
    for (const auto& layer : layers_) {
      param_index_.push_back(-1);
      if (const auto* conv = std::get_if<Conv2dSpec>(&layer)) {
        if (shape.size() != 3 || shape[0] != conv->in_channels)
          throw InvalidArchitecture("layer " + conv->name + " expects " +
                                    std::to_string(conv->in_channels) + " channels, got " +
                                    shape_string(shape));
        Tensor w({conv->out_channels, conv->in_channels, kKernel, kKernel});
        const double lim = glorot_limit(conv->in_channels * 9, conv->out_channels * 9);
        for (double& v : w) v = rng.uniform(-lim, lim);
        param_index_.back() = static_cast<int>(params.size());
        params.push_back({conv->name, std::move(w), Tensor({conv->out_channels})});
        shape[0] = conv->out_channels;
      } else if (std::holds_alternative<MaxPoolSpec>(layer)) {
        if (shape.size() != 3) throw InvalidArchitecture("max pooling needs a [C,H,W] input");
        shape[1] = pooled_size(shape[1]);
        shape[2] = pooled_size(shape[2]);
      } else if (std::holds_alternative<FlattenSpec>(layer)) {
        shape = {shape_size(shape)};
      } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
        if (shape.size() != 1 || shape[0] != dense->in_features)
          throw InvalidArchitecture("layer " + dense->name + " expects " +
                                    std::to_string(dense->in_features) + " inputs, got " +
                                    shape_string(shape));
        Tensor w({dense->in_features, dense->out_features});
        const double lim = glorot_limit(dense->in_features, dense->out_features);
        for (double& v : w) v = rng.uniform(-lim, lim);
        param_index_.back() = static_cast<int>(params.size());
        params.push_back({dense->name, std::move(w), Tensor({dense->out_features})});
        shape = {dense->out_features};
      }
      shapes_.push_back(shape);
    }
    if (shape.size() != 1) throw InvalidArchitecture("network must end in a dense layer");
    params_ = ParameterSet(std::move(params));
  }

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t num_classes() const { return shapes_.back()[0]; }

  /// Activation shape after each layer.
  const std::vector<Shape>& activation_shapes() const noexcept { return shapes_; }

  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }

  Tensor forward(const Tensor& image) const {
    check_input(image);
    Tensor a = image;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& layer = layers_[i];
      if (std::holds_alternative<Conv2dSpec>(layer)) {
        const auto& p = params_.layers()[static_cast<std::size_t>(param_index_[i])];
        a = conv2d_forward(a, p.weight, p.bias);
      } else if (std::holds_alternative<ReluSpec>(layer)) {
        for (double& v : a) v = v > 0.0 ? v : 0.0;
      } else if (std::holds_alternative<MaxPoolSpec>(layer)) {
        a = maxpool_forward(a).output;
      } else if (std::holds_alternative<FlattenSpec>(layer)) {
        a.reshape({a.size()});
      } else {
        const auto& p = params_.layers()[static_cast<std::size_t>(param_index_[i])];
        a = dense_forward(a, p.weight, p.bias);
      }
    }
    return a;
  }

  /// Class with the largest logit; ties go to the lower index.
  int predict(const Tensor& image) const {
    const Tensor logits = forward(image);
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[best]) best = k;
    return static_cast<int>(best);
  }

  /// Adds d(loss)/d(params) of one sample into `grads`; returns the loss.
  double accumulate_gradient(const Tensor& image, int label, ParameterSet& grads) const {
    check_input(image);
    const std::size_t n = layers_.size();
    std::vector<Tensor> inputs(n);
    // Patch matrices are large; reusing them across calls avoids page faults.
    thread_local std::vector<RowMatrix> cols;
    cols.resize(std::max(cols.size(), n));
    std::vector<PoolIndices> pools(n);

    Tensor a = image;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& layer = layers_[i];
      if (std::holds_alternative<Conv2dSpec>(layer)) {
        const auto& p = params_.layers()[static_cast<std::size_t>(param_index_[i])];
        const std::size_t h = a.dim(1), w = a.dim(2);
        im2col(a, cols[i]);
        inputs[i] = std::move(a);
        a = conv2d_forward_cols(cols[i], h, w, p.weight, p.bias);
      } else if (std::holds_alternative<ReluSpec>(layer)) {
        inputs[i] = a;
        for (double& v : a) v = v > 0.0 ? v : 0.0;
      } else if (std::holds_alternative<MaxPoolSpec>(layer)) {
        auto r = maxpool_forward(a);
        pools[i] = std::move(r.indices);
        a = std::move(r.output);
      } else if (std::holds_alternative<FlattenSpec>(layer)) {
        a.reshape({a.size()});
      } else {
        const auto& p = params_.layers()[static_cast<std::size_t>(param_index_[i])];
        Tensor y = dense_forward(a, p.weight, p.bias);
        inputs[i] = std::move(a);
        a = std::move(y);
      }
    }

    auto [loss, grad] = softmax_cross_entropy(a, label);
    for (std::size_t i = n; i-- > 0;) {
      const auto& layer = layers_[i];
      if (std::holds_alternative<Conv2dSpec>(layer)) {
        const auto pi = static_cast<std::size_t>(param_index_[i]);
        auto& g = grads.layers()[pi];
        Tensor grad_in;
        if (i > 0) grad_in = Tensor(inputs[i].shape());
        conv2d_backward_accumulate(cols[i], params_.layers()[pi].weight, grad, g.weight, g.bias,
                                   i > 0 ? &grad_in : nullptr);
        grad = std::move(grad_in);
      } else if (std::holds_alternative<ReluSpec>(layer)) {
        const Tensor& x = inputs[i];
        for (std::size_t k = 0; k < grad.size(); ++k)
          if (!(x[k] > 0.0)) grad[k] = 0.0;
      } else if (std::holds_alternative<MaxPoolSpec>(layer)) {
        grad = maxpool_backward(pools[i], grad);
      } else if (std::holds_alternative<FlattenSpec>(layer)) {
        grad.reshape(i > 0 ? shapes_[i - 1] : input_shape_);
      } else {
        const auto pi = static_cast<std::size_t>(param_index_[i]);
        auto& g = grads.layers()[pi];
        Tensor grad_in;
        if (i > 0) grad_in = Tensor(inputs[i].shape());
        dense_backward_accumulate(inputs[i], params_.layers()[pi].weight, grad, g.weight, g.bias,
                                  i > 0 ? &grad_in : nullptr);
        grad = std::move(grad_in);
      }
    }
    return loss;
  }

  /// Loss and gradient of a single sample.
  std::pair<double, ParameterSet> backward(const Tensor& image, int label) const {
    ParameterSet grads = params_.zeros_like();
    const double loss = accumulate_gradient(image, label, grads);
    return {loss, std::move(grads)};
  }

  /// Mean loss over `batch` (indices into `data`); `grads` receives the mean
  /// gradient. Samples are reduced in batch order.
  double loss_gradient(const ImageDataset& data, std::span<const std::size_t> batch,
                       ParameterSet& grads) const {
    if (batch.empty()) throw InvalidInput("loss_gradient: empty batch");
    if (grads.layers().size() != params_.layers().size()) grads = params_.zeros_like();
    grads.set_zero();
    double total = 0.0;
    for (std::size_t idx : batch) {
      const auto& s = data.at(idx);
      total += accumulate_gradient(s.image, s.label, grads);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& l : grads.layers()) {
      for (double& v : l.weight) v *= inv;
      for (double& v : l.bias) v *= inv;
    }
    return total * inv;
  }

  Evaluation evaluate(const ImageDataset& data) const {
    if (data.empty()) throw InvalidInput("evaluate: empty dataset");
    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto& s : data) {
      const Tensor logits = forward(s.image);
      loss += softmax_cross_entropy(logits, s.label).loss;
      std::size_t best = 0;
      for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = k;
      correct += static_cast<int>(best) == s.label ? 1 : 0;
    }
    const auto n = static_cast<double>(data.size());
    return {loss / n, static_cast<double>(correct) / n};
  }

 private:
  void check_input(const Tensor& image) const {
    if (image.shape() != input_shape_)
      throw ShapeError("network input " + shape_string(image.shape()) + " vs expected " +
                       shape_string(input_shape_));
  }

  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  std::uint64_t seed_;
  std::vector<int> param_index_;
  std::vector<Shape> shapes_;
  ParameterSet params_;
};

/// Three (conv3x3 + ReLU + maxpool2) stages, then dense-hidden + ReLU and a
/// dense output layer: "conv1", "conv2", "conv3", "dense", "output".
inline Network build_default_network(std::size_t num_classes, std::size_t input_size, std::uint64_t seed,
                                     ArchitectureOptions arch = {}) {
  if (input_size < 8)
    throw InvalidArchitecture("input size " + std::to_string(input_size) +
                              " is too small for three pooling stages (need >= 8)");
  if (num_classes < 2) throw InvalidArchitecture("need at least two classes");
  if (arch.channels == 0 || arch.hidden == 0) throw InvalidArchitecture("layer widths must be positive");
  const std::size_t s = pooled_size(pooled_size(pooled_size(input_size)));
  const std::size_t c = arch.channels;
  std::vector<LayerSpec> layers{
      Conv2dSpec{"conv1", 1, c}, ReluSpec{}, MaxPoolSpec{},
      Conv2dSpec{"conv2", c, c}, ReluSpec{}, MaxPoolSpec{},
      Conv2dSpec{"conv3", c, c}, ReluSpec{}, MaxPoolSpec{},
      FlattenSpec{},
      DenseSpec{"dense", s * s * c, arch.hidden}, ReluSpec{},
      DenseSpec{"output", arch.hidden, num_classes},
  };
  return Network(std::move(layers), {1, input_size, input_size}, seed);
}

}  // namespace rvsm::nn
