#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/nn/network.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm::metrics {

/// Fraction of entries that are exactly zero.
inline double sparsity(const Tensor& weights) {
  if (weights.empty()) throw InvalidInput("sparsity: empty tensor");
  std::size_t zeros = 0;
  for (double v : weights) zeros += v == 0.0 ? 1 : 0;
  return static_cast<double>(zeros) / static_cast<double>(weights.size());
}

struct SparsityReport {
  std::string layer;
  double zero_fraction = 0.0;
  std::map<int, double> buckets;  ///< n -> fraction with normalized |w| < 10^-n
  double gap_indicator = 0.0;     ///< bucket(10) / max(bucket(4), eps)
};

inline constexpr double kGapEpsilon = 1e-12;

/// Scale buckets of the l-infinity-normalized weights.
inline SparsityReport sparsity_buckets(const Tensor& weights, const std::vector<int>& scales,
                                       const std::string& layer = {}) {
  const double scale = linf_norm(weights);
  if (!(scale > 0.0)) throw DegenerateNormalization("sparsity_buckets: all-zero weights");
  auto fraction_below = [&](int n) {
    const double level = std::pow(10.0, -n);
    std::size_t count = 0;
    for (double v : weights) count += std::abs(v) / scale < level ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(weights.size());
  };
  SparsityReport r;
  r.layer = layer;
  r.zero_fraction = sparsity(weights);
  for (int n : scales) r.buckets[n] = fraction_below(n);
  r.gap_indicator = fraction_below(10) / std::max(fraction_below(4), kGapEpsilon);
  return r;
}

struct SignChangeReport {
  std::string layer;
  std::size_t changed = 0;
  std::size_t total = 0;
  double percent = 0.0;
};

inline SignChangeReport make_sign_change_report(std::string layer, std::size_t changed, std::size_t total) {
  if (total == 0) throw InvalidInput("sign change report over zero weights");
  return {std::move(layer), changed, total, 100.0 * static_cast<double>(changed) / static_cast<double>(total)};
}

/// Entries whose sign flipped between two snapshots; zeros never count as a change.
inline SignChangeReport sign_changes(const Tensor& initial, const Tensor& final_weights,
                                     const std::string& layer = {}) {
  require_same_shape(initial, final_weights, "sign_changes");
  if (initial.empty()) throw InvalidInput("sign_changes: empty tensor");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const double a = initial[i], b = final_weights[i];
    if (a != 0.0 && b != 0.0 && ((a > 0.0) != (b > 0.0))) ++changed;
  }
  return make_sign_change_report(layer, changed, initial.size());
}

inline double accuracy(const nn::Network& net, const nn::ImageDataset& data) {
  if (data.empty()) throw InvalidInput("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& s : data) correct += net.predict(s.image) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct HistogramBin {
  double center = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [-1, 1] of the l-infinity-normalized weights.
inline std::vector<HistogramBin> weight_histogram(const Tensor& weights, std::size_t bins) {
  if (bins < 2) throw InvalidParameter("weight_histogram: need at least 2 bins");
  const double scale = linf_norm(weights);
  if (!(scale > 0.0)) throw DegenerateNormalization("weight_histogram: all-zero weights");
  const double width = 2.0 / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b].center = -1.0 + (static_cast<double>(b) + 0.5) * width;
  for (double v : weights) {
    auto b = static_cast<std::ptrdiff_t>(std::floor((v / scale + 1.0) / width));
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

/// Percentage with three significant digits ("25.0", "12.2", "8.34").
inline std::string format_percent(double percent) {
  char buf[32];
  const double mag = std::abs(percent);
  const int decimals = mag >= 10.0 ? 1 : mag >= 1.0 ? 2 : 3;
  std::snprintf(buf, sizeof buf, "%.*f", decimals, percent);
  return buf;
}

}  // namespace rvsm::metrics
