#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm {

/// Weight and bias of one named layer.
struct LayerParameters {
  std::string name;
  Tensor weight;
  Tensor bias;

  friend bool operator==(const LayerParameters&, const LayerParameters&) = default;
};

/// Named parameter tensors in declaration order. Gradients use the same type.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<LayerParameters> layers) : layers_(std::move(layers)) {}

  std::vector<LayerParameters>& layers() noexcept { return layers_; }
  const std::vector<LayerParameters>& layers() const noexcept { return layers_; }

  bool contains(const std::string& name) const {
    return std::any_of(layers_.begin(), layers_.end(), [&](const auto& l) { return l.name == name; });
  }

  LayerParameters& at(const std::string& name) {
    for (auto& l : layers_)
      if (l.name == name) return l;
    throw InvalidParameter("no parameter layer named '" + name + "'");
  }

  const LayerParameters& at(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->at(name);
  }

  /// Same names and shapes, all zeros.
  ParameterSet zeros_like() const {
    ParameterSet z;
    for (const auto& l : layers_) z.layers_.push_back({l.name, Tensor(l.weight.shape()), Tensor(l.bias.shape())});
    return z;
  }

  void set_zero() {
    for (auto& l : layers_) {
      l.weight.fill(0.0);
      l.bias.fill(0.0);
    }
  }

  /// Number of weights, biases excluded.
  std::size_t weight_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size();
    return n;
  }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<LayerParameters> layers_;
};

using TensorMap = std::map<std::string, Tensor>;

/// params <- params - eta * grads for every tensor.
inline void sgd_update(ParameterSet& params, const ParameterSet& grads, double eta) {
  if (params.layers().size() != grads.layers().size())
    throw ShapeError("sgd_update: parameter/gradient layer count mismatch");
  for (std::size_t i = 0; i < params.layers().size(); ++i) {
    auto& p = params.layers()[i];
    const auto& g = grads.layers()[i];
    require_same_shape(p.weight, g.weight, "sgd_update");
    require_same_shape(p.bias, g.bias, "sgd_update");
    for (std::size_t k = 0; k < p.weight.size(); ++k) p.weight[k] -= eta * g.weight[k];
    for (std::size_t k = 0; k < p.bias.size(); ++k) p.bias[k] -= eta * g.bias[k];
  }
}

struct Evaluation {
  double loss = 0.0;
  std::optional<double> accuracy;  ///< classifiers only
};

/// What the optimizers need from a model: named parameters, a minibatch
/// loss/gradient oracle (mean over the batch) and a whole-dataset evaluation.
template <class M>
concept TrainableModel = requires(M& m, const M& cm, const typename M::dataset_type& data,
                                  std::span<const std::size_t> batch, ParameterSet& grads) {
  typename M::dataset_type;
  { m.parameters() } -> std::same_as<ParameterSet&>;
  { cm.parameters() } -> std::same_as<const ParameterSet&>;
  { cm.loss_gradient(data, batch, grads) } -> std::convertible_to<double>;
  { cm.evaluate(data) } -> std::same_as<Evaluation>;
};

}  // namespace rvsm
