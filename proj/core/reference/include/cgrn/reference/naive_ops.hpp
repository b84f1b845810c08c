#pragma once

#include <vector>

#include "cgrn/tensor.hpp"

/// Straightforward loop implementations that share nothing with the
/// optimized kernels except the Tensor container.
namespace cgrn::reference {

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t padding);

/// Scatter-add transposed convolution. Padding (k-1)/2 is cropped from the
/// leading edge and the output extent is stride * input extent.
Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride);

/// Input gradient of conv2d for output gradient dy, by direct accumulation.
Tensor conv2d_input_grad(const Tensor& dy, const Tensor& w, const Shape& x_shape, std::size_t stride,
                         std::size_t padding);

Tensor maxpool2d(const Tensor& x, std::size_t k, std::size_t stride);
Tensor avgpool2d(const Tensor& x, std::size_t k, std::size_t stride);

/// Training-mode normalization with two-pass per-channel statistics.
Tensor batchnorm2d_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Two-pass softmax of the negated logits followed by the mean negative log.
double softmax_xent(const Tensor& logits, const std::vector<int>& labels);
double l1(const Tensor& a, const Tensor& b);
/// Mean of -log sigmoid(real) plus mean of -log(1 - sigmoid(fake)), direct form.
double discriminator_loss(const Tensor& real, const Tensor& fake);

/// sum(a * b) accumulated in double.
double dot(const Tensor& a, const Tensor& b);

}  // namespace cgrn::reference
