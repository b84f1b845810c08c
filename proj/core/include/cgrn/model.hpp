#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "cgrn/network_config.hpp"
#include "cgrn/ops.hpp"
#include "cgrn/parameter_store.hpp"

namespace cgrn {

/// The five pooled encoder taps E_pool1..E_pool5 (spatial 32, 16, 8, 4, 1).
struct FeaturePyramid {
  std::array<Tensor, 5> taps;

  std::size_t batch() const { return taps[0].dim(0); }
};

using ShapeTrace = std::vector<LayerShape>;

/// Convolution or transposed convolution with optional batch norm and ReLU.
struct ConvLayer {
  Tensor weight;
  Tensor bias;  // undefined when followed by batch norm
  Tensor gamma;
  Tensor beta;
  ops::BatchNormState bn;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool transposed = false;
  bool batchnorm = true;
  bool relu = true;

  Tensor forward(const Tensor& x, ops::Mode mode, std::size_t groups = 1);
};

/// Scene-character recognizer with a multi-font glyph generator and a
/// conditional pair discriminator. All parameters live in one ParameterStore,
/// partitioned into encoder, classifier, generator (with the font embedding
/// table) and discriminator slices.
class Cgrn {
 public:
  /// Builds every layer and draws weights from N(0, 0.02^2) with a generator
  /// seeded by `seed`; batch-norm scales start at 1, shifts and biases at 0.
  Cgrn(NetworkConfig config, std::uint64_t seed);

  Cgrn(const Cgrn&) = delete;
  Cgrn& operator=(const Cgrn&) = delete;
  Cgrn(Cgrn&&) = default;
  Cgrn& operator=(Cgrn&&) = default;

  const NetworkConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }

  /// x: [B,3,64,64] in [0,1].
  FeaturePyramid extract(const Tensor& x, ops::Mode mode);

  /// Class logits [B,L]; P(y) is the softmax of the negated logits.
  Tensor classify(const FeaturePyramid& pyramid);

  /// Glyph of every sample in font `font` (0-based): [B,3,64,64].
  Tensor generate(const FeaturePyramid& pyramid, std::size_t font, ops::Mode mode);

  /// One glyph tensor per font, computed in a single batched pass.
  std::vector<Tensor> generate_all(const FeaturePyramid& pyramid, ops::Mode mode);

  /// Batched generation for `slots` font slots. fonts[j * B + b] is the
  /// embedding index used for sample b in slot j; output row j * B + b.
  /// Batch-norm statistics are computed per slot.
  Tensor generate_slots(const FeaturePyramid& pyramid, const std::vector<std::size_t>& fonts, std::size_t slots,
                        ops::Mode mode);

  /// Raw discriminator output D(x, t) [N,1] for a pair batch; P(real) is its sigmoid.
  Tensor discriminate(const Tensor& x, const Tensor& glyph, ops::Mode mode);

  Tensor font_embeddings() const { return font_table_; }

  /// When set, every named layer appends its output shape.
  void set_trace(ShapeTrace* trace) { trace_ = trace; }

 private:
  ConvLayer make_conv(std::mt19937_64& rng, Slice slice, const std::string& name, std::size_t in, std::size_t out,
                      std::size_t kernel, std::size_t stride, std::size_t padding, bool transposed, bool batchnorm,
                      bool relu);
  void trace(const std::string& name, const Tensor& t);

  NetworkConfig config_;
  ParameterStore store_;

  std::vector<ConvLayer> fen_;  // 13 convs, stage-major
  Tensor ccn_weight_, ccn_bias_;
  std::vector<ConvLayer> ggn_;  // 6 deconvs
  Tensor font_table_;           // [m, font_embed_dim]
  std::vector<ConvLayer> gdn_;  // 4 convs
  Tensor gdn_weight_, gdn_bias_;
  ShapeTrace* trace_ = nullptr;
};

}  // namespace cgrn
