#pragma once

#include <string>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn {

enum class PixelNorm { L1, L2 };

std::string to_string(PixelNorm n);
PixelNorm parse_pixel_norm(const std::string& s);

/// Mean over fonts of the per-font reconstruction loss.
Tensor loss_pixel(const std::vector<Tensor>& generated, const std::vector<Tensor>& targets,
                  PixelNorm norm = PixelNorm::L1);

/// Same quantity for slot-major stacks of equally sized fonts ([m*B,3,H,W]).
Tensor loss_pixel_stacked(const Tensor& generated, const Tensor& targets, PixelNorm norm = PixelNorm::L1);

/// Cross-entropy under the negated-logit convention.
Tensor loss_cr(const Tensor& logits, const std::vector<int>& labels);

/// Discriminator loss: mean of -log sigmoid(real) plus mean of
/// -log(1 - sigmoid(fake)).
Tensor loss_d(const Tensor& real_logits, const Tensor& fake_logits);

/// Non-saturating generator loss: -mean log sigmoid(fake).
Tensor loss_g_nonsaturating(const Tensor& fake_logits);

}  // namespace cgrn
