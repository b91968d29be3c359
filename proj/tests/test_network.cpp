#include <gtest/gtest.h>

#include <numeric>

#include "gradcheck.hpp"
#include "rvsm/nn/network.hpp"
#include "rvsm/parameters.hpp"

using namespace rvsm;
using namespace rvsm::nn;

TEST(Network, DefaultCensus) {
  const auto net = build_default_network(2, 100, 7);
  const std::vector<std::size_t> want{288, 9216, 9216, 692224, 256};
  const std::vector<std::string> names{"conv1", "conv2", "conv3", "dense", "output"};
  const auto& layers = net.parameters().layers();
  ASSERT_EQ(layers.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(layers[i].name, names[i]);
    EXPECT_EQ(layers[i].weight.size(), want[i]);
  }
  EXPECT_EQ(net.parameters().weight_count(), 711200u);
  EXPECT_GE(692224.0 / 711200.0, 0.973);
}

TEST(Network, SpatialChain) {
  const auto net = build_default_network(2, 100, 7);
  std::vector<std::size_t> sizes{net.input_shape()[1]};
  for (std::size_t i = 0; i < net.layers().size(); ++i)
    if (std::holds_alternative<MaxPoolSpec>(net.layers()[i])) sizes.push_back(net.activation_shapes()[i][1]);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{100, 50, 25, 13}));
}

TEST(Network, RejectsBadArchitectures) {
  EXPECT_THROW(build_default_network(2, 7, 0), InvalidArchitecture);
  EXPECT_THROW(build_default_network(1, 100, 0), InvalidArchitecture);
  EXPECT_THROW(build_default_network(2, 100, 0, {0, 128}), InvalidArchitecture);
  EXPECT_THROW(Network({DenseSpec{"d", 5, 2}}, {1, 4, 4}, 0), InvalidArchitecture);
}

TEST(Network, GlorotInitAndZeroBias) {
  const auto net = build_default_network(2, 100, 11);
  for (const auto& l : net.parameters().layers()) {
    const double fan_in = l.weight.rank() == 4 ? l.weight.dim(1) * 9.0 : l.weight.dim(0);
    const double fan_out = l.weight.rank() == 4 ? l.weight.dim(0) * 9.0 : l.weight.dim(1);
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    std::size_t positive = 0;
    for (double v : l.weight) {
      EXPECT_LE(std::abs(v), lim);
      positive += v > 0 ? 1 : 0;
    }
    const double frac = static_cast<double>(positive) / static_cast<double>(l.weight.size());
    EXPECT_NEAR(frac, 0.5, 0.1) << l.name;
    for (double b : l.bias) EXPECT_EQ(b, 0.0);
  }
}

TEST(Network, SeedDeterminesInit) {
  EXPECT_EQ(build_default_network(2, 16, 3).parameters(), build_default_network(2, 16, 3).parameters());
  EXPECT_FALSE(build_default_network(2, 16, 3).parameters() == build_default_network(2, 16, 4).parameters());
}

TEST(Network, BackwardLossMatchesForward) {
  auto p = rvsm::testing::make_gradcheck_problem(5);
  const auto [loss, grads] = p.net.backward(p.image, p.label);
  EXPECT_DOUBLE_EQ(loss, softmax_cross_entropy(p.net.forward(p.image), p.label).loss);
  EXPECT_THROW(p.net.forward(Tensor({1, 9, 9})), ShapeError);
}

TEST(Network, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto p = rvsm::testing::make_gradcheck_problem(seed);
    const auto r = rvsm::testing::check_gradients(p);
    EXPECT_EQ(r.failures, 0u) << "seed " << seed << " worst " << r.worst_entry << " rel " << r.worst_relative;
    EXPECT_EQ(r.checked, p.net.parameters().weight_count() + 2 + 2 + 2 + 128 + 2);
  }
}

TEST(Network, BatchGradientIsMeanOfSampleGradients) {
  auto net = build_default_network(2, 8, 9, {2, 4});
  ImageDataset data;
  Rng rng(1);
  for (int i = 0; i < 3; ++i) {
    Tensor img({1, 8, 8});
    for (double& v : img) v = rng.uniform();
    data.push_back({img, i % 2});
  }
  const std::vector<std::size_t> batch{0, 1, 2};
  ParameterSet mean;
  const double loss = net.loss_gradient(data, batch, mean);
  double want_loss = 0.0;
  auto want = net.parameters().zeros_like();
  for (const auto& s : data) want_loss += net.accumulate_gradient(s.image, s.label, want);
  EXPECT_NEAR(loss, want_loss / 3.0, 1e-15);
  for (std::size_t l = 0; l < want.layers().size(); ++l)
    for (std::size_t i = 0; i < want.layers()[l].weight.size(); ++i)
      EXPECT_NEAR(mean.layers()[l].weight[i], want.layers()[l].weight[i] / 3.0, 1e-15);
}

TEST(Network, EvaluateRandomNetNearChance) {
  auto net = build_default_network(2, 16, 21, {4, 8});
  ImageDataset data;
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    Tensor img({1, 16, 16});
    for (double& v : img) v = rng.uniform() < 0.1 ? 1.0 : 0.0;
    data.push_back({img, i % 2});
  }
  const auto ev = net.evaluate(data);
  ASSERT_TRUE(ev.accuracy.has_value());
  EXPECT_NEAR(*ev.accuracy, 0.5, 0.1);
  EXPECT_GT(ev.loss, 0.0);
}

TEST(Sgd, UpdateRule) {
  ParameterSet p(std::vector<LayerParameters>{{"w", Tensor({1}, {1.0}), Tensor({1}, {0.0})}});
  ParameterSet g = p;  // gradient of w^2 / 2 is w
  sgd_update(p, g, 0.1);
  EXPECT_DOUBLE_EQ(p.at("w").weight[0], 0.9);
  const auto before = p;
  sgd_update(p, g, 0.0);
  EXPECT_EQ(p, before);
}
