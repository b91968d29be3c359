#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>

#include "rvsm/nn/layers.hpp"
#include "rvsm/random.hpp"

using namespace rvsm;
using namespace rvsm::nn;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t) v = rng.uniform(-1.0, 1.0);
  return t;
}

/// Direct 3x3 same-padding cross-correlation.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t c_in = x.dim(0), h = x.dim(1), wd = x.dim(2), c_out = w.dim(0);
  Tensor out({c_out, h, wd});
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < wd; ++j) {
        double s = b[o];
        for (std::size_t c = 0; c < c_in; ++c)
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
              if (ii < 0 || jj < 0 || ii >= static_cast<long>(h) || jj >= static_cast<long>(wd)) continue;
              s += w[((o * c_in + c) * 3 + (di + 1)) * 3 + (dj + 1)] * x.at(c, ii, jj);
            }
        out.at(o, i, j) = s;
      }
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Conv, MatchesDirectConvolution) {
  const auto x = random_tensor({3, 7, 5}, 1);
  const auto w = random_tensor({4, 3, 3, 3}, 2);
  const auto b = random_tensor({4}, 3);
  const auto got = conv2d_forward(x, w, b);
  const auto want = naive_conv(x, w, b);
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Conv, SinglePixelKernelCenter) {
  Tensor x({1, 3, 3});
  x.at(0, 1, 1) = 1.0;
  Tensor w({1, 1, 3, 3});
  for (std::size_t k = 0; k < 9; ++k) w[k] = static_cast<double>(k + 1);
  const auto y = conv2d_forward(x, w, Tensor({1}));
  // Cross-correlation flips the kernel when read back from a unit impulse.
  EXPECT_EQ(y.at(0, 0, 0), 9.0);
  EXPECT_EQ(y.at(0, 1, 1), 5.0);
  EXPECT_EQ(y.at(0, 2, 2), 1.0);
}

TEST(Conv, BackwardIsAdjointOfForward) {
  const auto x = random_tensor({2, 6, 6}, 4);
  const auto w = random_tensor({3, 2, 3, 3}, 5);
  const auto up = random_tensor({3, 6, 6}, 6);
  const auto g = conv2d_backward(x, w, up);
  const Tensor zero_b({3});
  // <up, conv(x)> is linear in x and in w: its gradients are g.input and g.weights.
  EXPECT_NEAR(dot(up, conv2d_forward(x, w, zero_b)), dot(g.input, x), 1e-10);
  EXPECT_NEAR(dot(up, conv2d_forward(x, w, zero_b)), dot(g.weights, w), 1e-10);
  for (std::size_t o = 0; o < 3; ++o) {
    double s = 0.0;
    for (std::size_t k = 0; k < 36; ++k) s += up[o * 36 + k];
    EXPECT_NEAR(g.bias[o], s, 1e-12);
  }
}

TEST(Conv, RejectsBadShapes) {
  EXPECT_THROW(conv2d_forward(Tensor({2, 4}), Tensor({1, 2, 3, 3}), Tensor({1})), ShapeError);
  EXPECT_THROW(conv2d_forward(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3}), Tensor({1})), ShapeError);
  EXPECT_THROW(conv2d_forward(Tensor({2, 4, 4}), Tensor({1, 2, 3, 3}), Tensor({2})), ShapeError);
}

TEST(MaxPool, CeilModeOnOddSize) {
  EXPECT_EQ(pooled_size(100), 50u);
  EXPECT_EQ(pooled_size(25), 13u);
  Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto r = maxpool_forward(x);
  ASSERT_EQ(r.output.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(r.output[0], 5);
  EXPECT_EQ(r.output[1], 6);
  EXPECT_EQ(r.output[2], 8);
  EXPECT_EQ(r.output[3], 9);
}

TEST(MaxPool, BackwardRoutesToArgmaxFirstOnTies) {
  Tensor x({1, 2, 2}, {3, 3, 1, 3});
  const auto r = maxpool_forward(x);
  const auto g = maxpool_backward(r.indices, Tensor({1, 1, 1}, {2.5}));
  EXPECT_EQ(g[0], 2.5);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[3], 0.0);
}

TEST(Relu, ForwardBackward) {
  Tensor x({4}, {-1, 0, 0.5, 2});
  const auto y = relu_forward(x);
  EXPECT_EQ(y, Tensor({4}, {0, 0, 0.5, 2}));
  const auto g = relu_backward(x, Tensor({4}, {1, 1, 1, 1}));
  EXPECT_EQ(g, Tensor({4}, {0, 0, 1, 1}));
}

TEST(Dense, ForwardAndBackward) {
  Tensor w({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor b({2}, {0.5, -0.5});
  Tensor x({3}, {1, -1, 2});
  const auto y = dense_forward(x, w, b);
  EXPECT_DOUBLE_EQ(y[0], 1 - 3 + 10 + 0.5);
  EXPECT_DOUBLE_EQ(y[1], 2 - 4 + 12 - 0.5);
  const auto g = dense_backward(x, w, Tensor({2}, {1, 10}));
  EXPECT_DOUBLE_EQ(g.input[0], 1 + 20);
  EXPECT_DOUBLE_EQ(g.input[2], 5 + 60);
  EXPECT_DOUBLE_EQ(g.weights[1], 10);   // x[0] * up[1]
  EXPECT_DOUBLE_EQ(g.weights[4], 2);    // x[2] * up[0]
  EXPECT_EQ(g.bias, Tensor({2}, {1, 10}));
  EXPECT_THROW(dense_forward(Tensor({4}), w, b), ShapeError);
}

TEST(SoftmaxCrossEntropy, LossAndGradient) {
  const auto r = softmax_cross_entropy(Tensor({2}, {0, 0}), 1);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad_logits[0], 0.5, 1e-15);
  EXPECT_NEAR(r.grad_logits[1], -0.5, 1e-15);
}

TEST(SoftmaxCrossEntropy, StableForLargeMargins) {
  // log(1 + e^-20), evaluated independently.
  const double want = std::log1p(std::exp(-20.0));
  const auto r = softmax_cross_entropy(Tensor({2}, {10, -10}), 0);
  EXPECT_NEAR(r.loss, want, 1e-22);
  EXPECT_NEAR(r.loss, 2.0611536e-9, 1e-15);
  const auto big = softmax_cross_entropy(Tensor({2}, {1000, -1000}), 1);
  EXPECT_TRUE(std::isfinite(big.loss));
  EXPECT_NEAR(big.loss, 2000.0, 1e-9);
}

TEST(SoftmaxCrossEntropy, RejectsBadLabel) {
  EXPECT_THROW(softmax_cross_entropy(Tensor({2}), 2), InvalidLabel);
  EXPECT_THROW(softmax_cross_entropy(Tensor({2}), -1), InvalidLabel);
}

TEST(TensorStorage, SixtyFourByteAligned) {
  for (std::size_t n : {1u, 3u, 7u, 129u}) {
    const Tensor t({n});
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data()) % 64, 0u) << n;
  }
}
