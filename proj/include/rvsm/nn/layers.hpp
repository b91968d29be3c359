#pragma once

// Forward/backward kernels for the layer types of the curve classifier:
// 3x3 same-padded convolution, 2x2/stride-2 max pooling (ceil mode),
// ReLU, dense affine maps and softmax cross-entropy.
//
// Layouts: images and activations are [C, H, W]; conv weights [O, C, 3, 3];
// dense weights [in, out] with y = W^T x + b.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rvsm/error.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

inline constexpr std::size_t kKernel = 3;

namespace detail {

inline void check_conv_shapes(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_string(input.shape()));
  if (weights.rank() != 4 || weights.dim(2) != kKernel || weights.dim(3) != kKernel)
    throw ShapeError("conv2d: weights must be [O,C,3,3], got " + shape_string(weights.shape()));
  if (weights.dim(1) != input.dim(0))
    throw ShapeError("conv2d: weight channels " + std::to_string(weights.dim(1)) +
                     " vs input channels " + std::to_string(input.dim(0)));
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(0))
    throw ShapeError("conv2d: bias must be [O], got " + shape_string(bias.shape()));
}

}  // namespace detail

/// Unfolds a [C,H,W] input into a [C*9, H*W] patch matrix (zero padding of 1).
inline void im2col(const Tensor& input, RowMatrix& cols) {
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  cols.resize(static_cast<Eigen::Index>(c_in * 9), static_cast<Eigen::Index>(h * w));
  const double* src = input.data();
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        double* row = cols.data() + ((c * 9 + ky * 3 + kx) * h * w);
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          double* dst = row + y * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          const double* line = src + (c * h + static_cast<std::size_t>(sy)) * w;
          for (std::size_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            dst[x] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) ? 0.0 : line[sx];
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds a patch matrix back onto a [C,H,W] tensor.
inline void col2im(const RowMatrix& cols, Tensor& out) {
  const std::size_t c_in = out.dim(0), h = out.dim(1), w = out.dim(2);
  out.fill(0.0);
  double* dst = out.data();
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const double* row = cols.data() + ((c * 9 + ky * 3 + kx) * h * w);
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* line = dst + (c * h + static_cast<std::size_t>(sy)) * w;
          const double* s = row + y * w;
          for (std::size_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(w)) line[sx] += s[x];
          }
        }
      }
    }
  }
}

/// Convolution given an already unfolded input.
inline Tensor conv2d_forward_cols(const RowMatrix& cols, std::size_t h, std::size_t w,
                                  const Tensor& weights, const Tensor& bias) {
  const auto c_out = weights.dim(0);
  Tensor out({c_out, h, w});
  ConstMatrixMap wm(weights.data(), static_cast<Eigen::Index>(c_out), cols.rows());
  MatrixMap om(out.data(), static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(h * w));
  om.noalias() = wm * cols;
  om.colwise() += ConstVectorMap(bias.data(), static_cast<Eigen::Index>(c_out));
  return out;
}

/// Same-padded 3x3 cross-correlation, [C,H,W] -> [O,H,W].
inline Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  detail::check_conv_shapes(input, weights, bias);
  RowMatrix cols;
  im2col(input, cols);
  return conv2d_forward_cols(cols, input.dim(1), input.dim(2), weights, bias);
}

struct ConvGradients {
  Tensor input;    ///< empty when not requested
  Tensor weights;
  Tensor bias;
};

namespace detail {

/// col2im restricted to output positions [p0, p0 + block.cols()), added onto `out`.
inline void col2im_add_block(const RowMatrix& block, std::size_t p0, Tensor& out) {
  const std::size_t c_in = out.dim(0), h = out.dim(1), w = out.dim(2);
  const std::size_t nb = static_cast<std::size_t>(block.cols());
  double* dst = out.data();
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const double* row = block.data() + (c * 9 + ky * 3 + kx) * nb;
        std::size_t p = p0;
        while (p < p0 + nb) {
          const std::size_t y = p / w, x0 = p % w;
          const std::size_t x1 = std::min(w, x0 + (p0 + nb - p));
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy >= 0 && sy < static_cast<std::ptrdiff_t>(h)) {
            double* line = dst + (c * h + static_cast<std::size_t>(sy)) * w;
            const double* s = row + (p - p0);
            for (std::size_t x = x0; x < x1; ++x) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
              if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(w)) line[sx] += s[x - x0];
            }
          }
          p += x1 - x0;
        }
      }
    }
  }
}

/// Spatial positions per backward tile; keeps the patch-gradient tile in L2.
inline constexpr Eigen::Index kBackwardTile = 256;

}  // namespace detail

/// Accumulates weight/bias gradients into `grad_weights`/`grad_bias` and
/// optionally writes the input gradient. Used by the network's hot loop.
/// Works on spatial tiles so the patch-gradient matrix never exists in full.
inline void conv2d_backward_accumulate(const RowMatrix& cols, const Tensor& weights,
                                       const Tensor& upstream, Tensor& grad_weights,
                                       Tensor& grad_bias, Tensor* grad_input) {
  const auto c_out = static_cast<Eigen::Index>(weights.dim(0));
  const auto hw = static_cast<Eigen::Index>(upstream.size() / weights.dim(0));
  ConstMatrixMap up(upstream.data(), c_out, hw);
  MatrixMap gw(grad_weights.data(), c_out, cols.rows());
  VectorMap(grad_bias.data(), c_out) += up.rowwise().sum();
  ConstMatrixMap wm(weights.data(), c_out, cols.rows());
  if (grad_input != nullptr) grad_input->fill(0.0);
  thread_local RowMatrix tile;
  for (Eigen::Index p0 = 0; p0 < hw; p0 += detail::kBackwardTile) {
    const Eigen::Index nb = std::min(detail::kBackwardTile, hw - p0);
    gw.noalias() += up.middleCols(p0, nb) * cols.middleCols(p0, nb).transpose();
    if (grad_input != nullptr) {
      tile.resize(cols.rows(), nb);
      tile.noalias() = wm.transpose() * up.middleCols(p0, nb);
      detail::col2im_add_block(tile, static_cast<std::size_t>(p0), *grad_input);
    }
  }
}

inline ConvGradients conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream) {
  if (input.rank() != 3) throw ShapeError("conv2d_backward: input must be [C,H,W]");
  if (weights.rank() != 4 || weights.dim(1) != input.dim(0) || weights.dim(2) != kKernel ||
      weights.dim(3) != kKernel)
    throw ShapeError("conv2d_backward: weights " + shape_string(weights.shape()) +
                     " incompatible with input " + shape_string(input.shape()));
  if (upstream.shape() != Shape{weights.dim(0), input.dim(1), input.dim(2)})
    throw ShapeError("conv2d_backward: upstream gradient shape " + shape_string(upstream.shape()));
  RowMatrix cols;
  im2col(input, cols);
  ConvGradients g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({weights.dim(0)})};
  conv2d_backward_accumulate(cols, weights, upstream, g.weights, g.bias, &g.input);
  return g;
}

/// Argmax bookkeeping from a max-pool forward pass.
struct PoolIndices {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::size_t> argmax;  ///< flat input index per output element
};

struct PoolResult {
  Tensor output;
  PoolIndices indices;
};

inline std::size_t pooled_size(std::size_t n) { return (n + 1) / 2; }

/// 2x2 stride-2 max pooling in ceil mode; odd trailing rows/columns form
/// truncated windows. Ties resolve to the first element in row-major order.
inline PoolResult maxpool_forward(const Tensor& input) {
  if (input.rank() != 3) throw ShapeError("maxpool: input must be [C,H,W], got " + shape_string(input.shape()));
  const std::size_t c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = pooled_size(h), ow = pooled_size(w);
  PoolResult r{Tensor({c_n, oh, ow}), PoolIndices{input.shape(), {c_n, oh, ow}, {}}};
  r.indices.argmax.resize(c_n * oh * ow);
  const double* src = input.data();
  double* dst = r.output.data();
  std::size_t o = 0;
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        std::size_t best = (c * h + 2 * y) * w + 2 * x;
        double best_v = src[best];
        for (std::size_t dy = 0; dy < 2; ++dy) {
          const std::size_t yy = 2 * y + dy;
          if (yy >= h) break;
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t xx = 2 * x + dx;
            if (xx >= w) break;
            const std::size_t idx = (c * h + yy) * w + xx;
            if (src[idx] > best_v) {
              best_v = src[idx];
              best = idx;
            }
          }
        }
        dst[o] = best_v;
        r.indices.argmax[o] = best;
      }
    }
  }
  return r;
}

inline Tensor maxpool_backward(const PoolIndices& indices, const Tensor& upstream) {
  if (upstream.shape() != indices.output_shape || indices.argmax.size() != upstream.size())
    throw ShapeError("maxpool_backward: upstream shape " + shape_string(upstream.shape()) +
                     " does not match recorded " + shape_string(indices.output_shape));
  Tensor grad(indices.input_shape);
  for (std::size_t o = 0; o < upstream.size(); ++o) grad[indices.argmax[o]] += upstream[o];
  return grad;
}

inline Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return out;
}

/// Subgradient 0 at 0.
inline Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  require_same_shape(input, upstream, "relu_backward");
  Tensor grad = upstream;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(input[i] > 0.0)) grad[i] = 0.0;
  return grad;
}

inline void check_dense_shapes(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2) throw ShapeError("dense: weights must be [in,out]");
  if (x.size() != weights.dim(0))
    throw ShapeError("dense: input length " + std::to_string(x.size()) + " vs weights " +
                     shape_string(weights.shape()));
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(1))
    throw ShapeError("dense: bias must be [out], got " + shape_string(bias.shape()));
}

/// y = W^T x + b for W of shape [in, out]; x may have any shape of `in` elements.
inline Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  check_dense_shapes(x, weights, bias);
  const auto n_in = static_cast<Eigen::Index>(weights.dim(0));
  const auto n_out = static_cast<Eigen::Index>(weights.dim(1));
  Tensor y({weights.dim(1)});
  ConstMatrixMap wm(weights.data(), n_in, n_out);
  VectorMap(y.data(), n_out).noalias() = wm.transpose() * ConstVectorMap(x.data(), n_in);
  VectorMap(y.data(), n_out) += ConstVectorMap(bias.data(), n_out);
  return y;
}

struct DenseGradients {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

inline void dense_backward_accumulate(const Tensor& x, const Tensor& weights, const Tensor& upstream,
                                      Tensor& grad_weights, Tensor& grad_bias, Tensor* grad_input) {
  const auto n_in = static_cast<Eigen::Index>(weights.dim(0));
  const auto n_out = static_cast<Eigen::Index>(weights.dim(1));
  ConstVectorMap up(upstream.data(), n_out);
  MatrixMap(grad_weights.data(), n_in, n_out).noalias() += ConstVectorMap(x.data(), n_in) * up.transpose();
  VectorMap(grad_bias.data(), n_out) += up;
  if (grad_input != nullptr) {
    VectorMap(grad_input->data(), n_in).noalias() = ConstMatrixMap(weights.data(), n_in, n_out) * up;
  }
}

inline DenseGradients dense_backward(const Tensor& x, const Tensor& weights, const Tensor& upstream) {
  if (weights.rank() != 2 || x.size() != weights.dim(0) || upstream.size() != weights.dim(1))
    throw ShapeError("dense_backward: incompatible shapes x" + shape_string(x.shape()) + " W" +
                     shape_string(weights.shape()) + " dy" + shape_string(upstream.shape()));
  DenseGradients g{Tensor(x.shape()), Tensor(weights.shape()), Tensor({weights.dim(1)})};
  dense_backward_accumulate(x, weights, upstream, g.weights, g.bias, &g.input);
  return g;
}

struct LossAndGradient {
  double loss;
  Tensor grad_logits;
};

/// -log softmax(logits)[label] and its gradient softmax - onehot.
inline LossAndGradient softmax_cross_entropy(const Tensor& logits, int label) {
  const std::size_t k = logits.size();
  if (label < 0 || static_cast<std::size_t>(label) >= k)
    throw InvalidLabel("label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
  std::size_t top = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (logits[i] > logits[top]) top = i;
  const double m = logits[top];
  // log-sum-exp as m + log1p(sum over the non-maximal terms)
  double rest = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    if (i != top) rest += std::exp(logits[i] - m);
  const double lse = m + std::log1p(rest);
  // Subtract before adding the log1p term so a confident prediction keeps full precision.
  LossAndGradient r{(m - logits[static_cast<std::size_t>(label)]) + std::log1p(rest), Tensor(logits.shape())};
  for (std::size_t i = 0; i < k; ++i) r.grad_logits[i] = std::exp(logits[i] - lse);
  r.grad_logits[static_cast<std::size_t>(label)] -= 1.0;
  return r;
}

}  // namespace rvsm::nn
