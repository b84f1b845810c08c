#pragma once

#include <cstddef>
#include <vector>

#include "cgrn/tensor.hpp"

// Differentiable tensor operations. Every function records itself into the
// thread's active Graph when one of its inputs requires a gradient.
namespace cgrn::ops {

// --- convolution -----------------------------------------------------------

/// Cross-correlation. input [B,Cin,H,W], kernel [Cout,Cin,k,k], bias [Cout]
/// or undefined. Output spatial extent floor((H + 2p - k) / s) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding);

/// Padding used by deconv2d for a given kernel size: (k - 1) / 2.
std::size_t deconv_padding(std::size_t kernel);
/// Output padding that makes deconv2d scale the extent by exactly `stride`.
std::size_t deconv_output_padding(std::size_t kernel, std::size_t stride);

/// Transposed convolution, the adjoint of conv2d(., kernel, stride,
/// deconv_padding(k)). input [B,Cin,H,W], kernel [Cin,Cout,k,k]; output
/// [B,Cout,stride*H,stride*W]. stride must be 1 or 2 (stride 1 needs odd k).
Tensor deconv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride);

// --- pooling ---------------------------------------------------------------

/// Ties resolve to the first (row-major lowest) index in the window.
Tensor maxpool2d(const Tensor& input, std::size_t kernel, std::size_t stride);
Tensor avgpool2d(const Tensor& input, std::size_t kernel, std::size_t stride);

// --- normalization ---------------------------------------------------------

enum class Mode { Train, Eval };

struct BatchNormState {
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]
  Real momentum = Real(0.9);  // weight kept on the previous running value
  Real eps = Real(1e-5);

  static BatchNormState create(std::size_t channels);
};

/// Per-channel batch normalization over (B,H,W). With groups > 1 the batch
/// axis is split into `groups` contiguous blocks, each normalized with its own
/// statistics (the running statistics receive the mean over blocks).
Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                   Mode mode, std::size_t groups = 1);

// --- elementwise / structural ------------------------------------------------

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// x [B,n] * W [n,o] + b [o].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);
/// Flattens all axes after the first.
Tensor flatten(const Tensor& x);

/// Tiles the batch axis: output row j*B + b is input row b, j < times.
Tensor repeat_batch(const Tensor& x, std::size_t times);
/// Rows [begin, begin + count) of the batch axis.
Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t count);
/// Gathers rows of table [N,E] -> [indices.size(), E]. Indices must be < N.
Tensor embedding(const Tensor& table, const std::vector<std::size_t>& indices);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// sum_i coeffs[i] * terms[i] over scalar terms, evaluated left to right.
Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<Real>& coeffs);

// --- losses ----------------------------------------------------------------

/// Softmax over the negated logits, P(j) = exp(-C_j) / sum_k exp(-C_k).
/// Not differentiable; used for reporting and prediction.
Tensor negated_softmax(const Tensor& logits);

/// Mean over the batch of -log P(label), with P as in negated_softmax.
Tensor softmax_xent(const Tensor& logits, const std::vector<int>& labels);

/// Mean absolute difference over all elements.
Tensor l1_loss(const Tensor& a, const Tensor& b);
/// Mean squared difference over all elements.
Tensor l2_loss(const Tensor& a, const Tensor& b);

/// Mean over elements of -[y log sigmoid(x) + (1-y) log(1 - sigmoid(x))] for
/// a constant target y, in log-sigmoid form.
Tensor bce_with_logits(const Tensor& logits, Real target);

}  // namespace cgrn::ops
