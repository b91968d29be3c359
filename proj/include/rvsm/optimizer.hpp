#pragma once

// Relaxed variable splitting for sparse training.
//
// Minimizes  L(u, w) = f(w) + lambda P(u) + beta/2 ||w - u||^2  by alternating
//   u <- argmin_u L(u, w)                         (exact thresholding at gamma = lambda/beta)
//   w <- w - eta grad f(w) - eta beta (w - u)     (optionally renormalized to unit norm)
// on the "thresholded" layers. All other parameters take plain SGD steps.
// The deployed model uses u in place of w for thresholded layers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/parameters.hpp"
#include "rvsm/prox.hpp"
#include "rvsm/random.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm {

struct RvsmConfig {
  double eta = 0.02;
  double beta = 0.1;
  PenaltySpec penalty = PenaltySpec::l0(0.0005);
  std::vector<std::string> thresholded_layers{"dense"};
  bool normalize_w = false;
  int epochs = 20;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;  ///< minibatch shuffling stream

  double lambda() const noexcept { return penalty.lambda; }
  ThresholdContext threshold_context() const { return {penalty.lambda, beta}; }
  double gamma() const { return threshold_context().gamma(); }

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("eta must be finite and > 0");
    (void)threshold_context();
    penalty.validate();
    if (epochs <= 0) throw InvalidParameter("epochs must be positive");
    if (batch_size == 0) throw InvalidParameter("batch_size must be positive");
  }

  void validate(const ParameterSet& params) const {
    validate();
    for (const auto& name : thresholded_layers)
      if (!params.contains(name)) throw InvalidParameter("thresholded layer '" + name + "' not in model");
  }
};

/// One row of the per-epoch trace. `accuracy`/`test_loss` are NaN when no
/// test split (or no classifier) is available.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double sparsity = 0.0;
};

struct RvsmState {
  TensorMap u;
  std::int64_t iteration = 0;
  std::vector<std::pair<std::int64_t, double>> lagrangian_trace;
  std::vector<EpochRecord> loss_trace;
};

struct EquilibriumReport {
  double u_residual = 0.0;     ///< max |u - T(w)|
  double grad_residual = 0.0;  ///< || grad f(w) + beta (w - u) ||_2 over thresholded layers
};

/// Exact u-minimizer of L for fixed w: elementwise threshold at lambda / beta.
inline Tensor u_step(const RvsmConfig& config, const Tensor& w) {
  return threshold(config.penalty, config.gamma(), w);
}

inline Tensor w_step(const RvsmConfig& config, const Tensor& w, const Tensor& u_next, const Tensor& grad_f) {
  require_same_shape(w, u_next, "w_step");
  require_same_shape(w, grad_f, "w_step");
  const double eta = config.eta;
  const double eb = config.eta * config.beta;
  Tensor out(w.shape());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - eta * grad_f[i] - eb * (w[i] - u_next[i]);
  if (config.normalize_w) {
    const double norm = l2_norm(out);
    if (!(norm > 0.0)) throw DegenerateNormalization("w_step: cannot normalize a zero weight vector");
    for (double& v : out) v /= norm;
  }
  return out;
}

/// Weights of the thresholded layers, keyed by layer name.
inline TensorMap thresholded_weights(const RvsmConfig& config, const ParameterSet& params) {
  TensorMap w;
  for (const auto& name : config.thresholded_layers) w.emplace(name, params.at(name).weight);
  return w;
}

/// f + lambda P(u) + beta/2 sum ||w - u||^2 over the layers present in `u`.
inline double lagrangian_value(const RvsmConfig& config, double f_value, const TensorMap& u, const TensorMap& w) {
  double penalty = 0.0;
  double split = 0.0;
  for (const auto& [name, ut] : u) {
    const auto it = w.find(name);
    if (it == w.end()) throw ShapeError("lagrangian_value: no weights for layer " + name);
    require_same_shape(ut, it->second, "lagrangian_value");
    penalty += penalty_value(config.penalty, ut);
    for (std::size_t i = 0; i < ut.size(); ++i) {
      const double d = it->second[i] - ut[i];
      split += d * d;
    }
  }
  return f_value + penalty + 0.5 * config.beta * split;
}

/// Fraction of exact zeros across all tensors of the map.
inline double zero_fraction(const TensorMap& tensors) {
  std::size_t zeros = 0, total = 0;
  for (const auto& [name, t] : tensors) {
    for (double v : t) zeros += v == 0.0 ? 1 : 0;
    total += t.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

/// Copy of `model` with each thresholded layer's weight replaced by u.
template <TrainableModel M>
M deployed_model(const M& model, const RvsmState& state) {
  M out = model;
  for (const auto& [name, u] : state.u) {
    auto& layer = out.parameters().at(name);
    require_same_shape(layer.weight, u, "deployed_model");
    layer.weight = u;
  }
  return out;
}

struct IterationEvent {
  std::int64_t iteration;
  const TensorMap& u;            ///< freshly thresholded
  const ParameterSet& params;    ///< w the thresholding was computed from
};

using IterationObserver = std::function<void(const IterationEvent&)>;

namespace detail {

inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  return batches;
}

inline void check_finite_params(const ParameterSet& params, std::int64_t iteration) {
  for (const auto& l : params.layers())
    if (!l.weight.all_finite() || !l.bias.all_finite())
      throw DivergenceError(iteration, "non-finite parameters in layer " + l.name + " at iteration " +
                                           std::to_string(iteration));
}

template <TrainableModel M>
void record_epoch(std::vector<EpochRecord>& trace, int epoch, double train_loss, const M& deployed,
                  const typename M::dataset_type* test, double sparsity) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss = train_loss;
  rec.sparsity = sparsity;
  if (test != nullptr && !test->empty()) {
    const Evaluation ev = deployed.evaluate(*test);
    rec.test_loss = ev.loss;
    if (ev.accuracy) rec.accuracy = *ev.accuracy;
  }
  trace.push_back(rec);
}

}  // namespace detail

/// Minibatch RVSM. Each iteration: u-step on every thresholded layer, one
/// minibatch gradient at the current w, then the w-step. The recorded
/// Lagrangian value is L(u^{t+1}, w^t) on the minibatch loss.
template <TrainableModel M>
RvsmState rvsm_train(M& model, const typename M::dataset_type& train, const typename M::dataset_type* test,
                     const RvsmConfig& config, const IterationObserver& observer = {}) {
  if (train.empty()) throw InvalidInput("rvsm_train: empty training set");
  config.validate(model.parameters());
  RvsmState state;
  Rng rng(config.seed);
  ParameterSet grads = model.parameters().zeros_like();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& batch : detail::epoch_batches(train.size(), config.batch_size, rng)) {
      for (const auto& name : config.thresholded_layers)
        state.u[name] = u_step(config, model.parameters().at(name).weight);
      if (observer) observer(IterationEvent{state.iteration, state.u, model.parameters()});

      const double f = model.loss_gradient(train, batch, grads);
      if (!std::isfinite(f))
        throw DivergenceError(state.iteration,
                              "non-finite loss at iteration " + std::to_string(state.iteration));
      loss_sum += f * static_cast<double>(batch.size());
      state.lagrangian_trace.emplace_back(
          state.iteration, lagrangian_value(config, f, state.u, thresholded_weights(config, model.parameters())));

      auto& layers = model.parameters().layers();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& p = layers[i];
        const auto& g = grads.layers()[i];
        const auto u = state.u.find(p.name);
        if (u != state.u.end()) {
          p.weight = w_step(config, p.weight, u->second, g.weight);
        } else {
          for (std::size_t k = 0; k < p.weight.size(); ++k) p.weight[k] -= config.eta * g.weight[k];
        }
        for (std::size_t k = 0; k < p.bias.size(); ++k) p.bias[k] -= config.eta * g.bias[k];
      }
      detail::check_finite_params(model.parameters(), state.iteration);
      ++state.iteration;
    }
    detail::record_epoch(state.loss_trace, epoch, loss_sum / static_cast<double>(train.size()),
                         deployed_model(model, state), test, zero_fraction(state.u));
  }
  return state;
}

/// Residuals of the limit-point system u = T(w), grad f(w) + beta (w - u) = 0,
/// with the gradient taken over all of `data`.
template <TrainableModel M>
EquilibriumReport equilibrium_residuals(const RvsmConfig& config, const M& model, const RvsmState& state,
                                        const typename M::dataset_type& data) {
  if (data.empty()) throw InvalidInput("equilibrium_residuals: empty data");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  ParameterSet grads = model.parameters().zeros_like();
  model.loss_gradient(data, all, grads);

  EquilibriumReport report;
  double sq = 0.0;
  for (const auto& [name, u] : state.u) {
    const Tensor& w = model.parameters().at(name).weight;
    const Tensor& g = grads.at(name).weight;
    const Tensor tw = u_step(config, w);
    for (std::size_t i = 0; i < u.size(); ++i) {
      report.u_residual = std::max(report.u_residual, std::abs(u[i] - tw[i]));
      const double r = g[i] + config.beta * (w[i] - u[i]);
      sq += r * r;
    }
  }
  report.grad_residual = std::sqrt(sq);
  return report;
}

struct PenalizedSgdState {
  std::int64_t iteration = 0;
  std::vector<EpochRecord> loss_trace;
};

/// Baseline: SGD on f(w) + lambda P(w) with the penalty's (sub)gradient on the
/// thresholded layers. Sparsity is counted on w itself.
template <TrainableModel M>
PenalizedSgdState penalized_sgd_train(M& model, const typename M::dataset_type& train,
                                      const typename M::dataset_type* test, const RvsmConfig& config) {
  if (config.penalty.kind == PenaltyKind::L0)
    throw UnsupportedPenalty("direct SGD needs a differentiable penalty (l1 or tl1), not l0");
  if (train.empty()) throw InvalidInput("penalized_sgd_train: empty training set");
  config.validate(model.parameters());
  PenalizedSgdState state;
  Rng rng(config.seed);
  ParameterSet grads = model.parameters().zeros_like();
  const double lambda = config.penalty.lambda;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& batch : detail::epoch_batches(train.size(), config.batch_size, rng)) {
      const double f = model.loss_gradient(train, batch, grads);
      if (!std::isfinite(f))
        throw DivergenceError(state.iteration,
                              "non-finite loss at iteration " + std::to_string(state.iteration));
      loss_sum += f * static_cast<double>(batch.size());
      auto& layers = model.parameters().layers();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& p = layers[i];
        const auto& g = grads.layers()[i];
        const bool penalized = std::find(config.thresholded_layers.begin(), config.thresholded_layers.end(),
                                         p.name) != config.thresholded_layers.end();
        if (penalized && lambda != 0.0) {
          for (std::size_t k = 0; k < p.weight.size(); ++k)
            p.weight[k] -= config.eta * (g.weight[k] + lambda * penalty_derivative(config.penalty, p.weight[k]));
        } else {
          for (std::size_t k = 0; k < p.weight.size(); ++k) p.weight[k] -= config.eta * g.weight[k];
        }
        for (std::size_t k = 0; k < p.bias.size(); ++k) p.bias[k] -= config.eta * g.bias[k];
      }
      detail::check_finite_params(model.parameters(), state.iteration);
      ++state.iteration;
    }
    detail::record_epoch(state.loss_trace, epoch, loss_sum / static_cast<double>(train.size()), model, test,
                         zero_fraction(thresholded_weights(config, model.parameters())));
  }
  return state;
}

}  // namespace rvsm
