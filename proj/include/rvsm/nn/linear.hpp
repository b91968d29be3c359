#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/parameters.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm::nn {

struct RegressionSample {
  std::vector<double> features;
  double target = 0.0;
};

using RegressionDataset = std::vector<RegressionSample>;

/// One dense layer "dense" ([features, 1], optional bias) under the
/// least-squares loss f(w) = mean_i (w^T x_i + b - y_i)^2 / 2.
///
/// Smooth with a constant Hessian, which makes it the reference problem for
/// checking Lagrangian descent and the equilibrium residuals.
class LinearRegression {
 public:
  using dataset_type = RegressionDataset;

  LinearRegression(std::size_t features, bool use_bias)
      : use_bias_(use_bias),
        params_(std::vector<LayerParameters>{{"dense", Tensor({features, 1}), Tensor({1})}}) {}

  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }
  bool uses_bias() const noexcept { return use_bias_; }

  double predict(const std::vector<double>& x) const {
    const auto& w = params_.layers()[0].weight;
    if (x.size() != w.size()) throw ShapeError("LinearRegression: feature count mismatch");
    double y = use_bias_ ? params_.layers()[0].bias[0] : 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) y += w[j] * x[j];
    return y;
  }

  double loss_gradient(const RegressionDataset& data, std::span<const std::size_t> batch,
                       ParameterSet& grads) const {
    if (batch.empty()) throw InvalidInput("loss_gradient: empty batch");
    if (grads.layers().size() != 1) grads = params_.zeros_like();
    grads.set_zero();
    auto& gw = grads.layers()[0].weight;
    auto& gb = grads.layers()[0].bias;
    double total = 0.0;
    for (std::size_t idx : batch) {
      const auto& s = data.at(idx);
      const double r = predict(s.features) - s.target;
      total += 0.5 * r * r;
      for (std::size_t j = 0; j < s.features.size(); ++j) gw[j] += r * s.features[j];
      if (use_bias_) gb[0] += r;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : gw) v *= inv;
    gb[0] *= inv;
    return total * inv;
  }

  Evaluation evaluate(const RegressionDataset& data) const {
    if (data.empty()) throw InvalidInput("evaluate: empty dataset");
    double total = 0.0;
    for (const auto& s : data) {
      const double r = predict(s.features) - s.target;
      total += 0.5 * r * r;
    }
    return {total / static_cast<double>(data.size()), std::nullopt};
  }

 private:
  bool use_bias_;
  ParameterSet params_;
};

}  // namespace rvsm::nn
