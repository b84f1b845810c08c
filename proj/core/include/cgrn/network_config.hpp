#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn {

struct Rational {
  std::size_t num = 1;
  std::size_t den = 1;

  /// Parses "1/8", "0.125" is not accepted; a bare integer means n/1.
  static Rational parse(const std::string& text);
  std::string str() const;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

enum class Preset { Paper, Desk };
enum class GanMode { Minimax, NonSaturating };
enum class FinalActivation { Sigmoid, Relu };
enum class PoolKind { Avg, Max };

std::string to_string(Preset p);
std::string to_string(GanMode m);
std::string to_string(FinalActivation a);
std::string to_string(PoolKind k);
Preset parse_preset(const std::string& s);
GanMode parse_gan_mode(const std::string& s);
FinalActivation parse_final_activation(const std::string& s);
PoolKind parse_pool_kind(const std::string& s);

/// Layer-by-layer description of the four subnetworks. Channel counts are the
/// full-width ones scaled by width_mult.
struct NetworkConfig {
  Preset preset = Preset::Desk;
  Rational width_mult{1, 8};
  std::size_t num_classes = 36;
  std::size_t num_fonts = 4;
  std::size_t font_embed_dim = 64;
  std::size_t image_size = 64;
  GanMode gan_mode = GanMode::Minimax;
  FinalActivation final_activation = FinalActivation::Sigmoid;
  PoolKind ccn_pool = PoolKind::Avg;

  static NetworkConfig paper(std::size_t num_classes = 62, std::size_t num_fonts = 4);
  static NetworkConfig desk(std::size_t num_classes = 36, std::size_t num_fonts = 4);

  /// Throws ShapeError when a scaled channel count is fractional or zero, or
  /// another field is out of range.
  void validate() const;

  /// Scales a full-width channel count.
  std::size_t channels(std::size_t full_width) const;

  /// Input width of the classifier FC: sum of the five tapped channel counts.
  std::size_t ccn_feature_dim() const;
  /// Input width of the discriminator FC: 8 * 8 * channels(512).
  std::size_t gdn_fc_dim() const;
};

/// Full-width layer tables.
struct ConvSpec {
  std::string name;
  std::size_t channels;
  std::size_t kernel;
  std::size_t stride;
  std::size_t padding;
};

/// The VGG-style encoder: stage s has kFenStageDepth[s] convs of 3x3.
inline constexpr std::size_t kFenStages = 5;
inline constexpr std::size_t kFenStageDepth[kFenStages] = {2, 2, 3, 3, 3};
inline constexpr std::size_t kFenStageChannels[kFenStages] = {64, 128, 256, 512, 512};
/// Pool kernel == stride per stage (E_pool1..E_pool5).
inline constexpr std::size_t kFenPool[kFenStages] = {2, 2, 2, 2, 4};
/// Deconv output channels G_deconv1..6 (the last is the RGB image, never scaled).
inline constexpr std::size_t kGgnChannels[6] = {512, 512, 256, 128, 64, 3};
inline constexpr std::size_t kGgnKernel = 5;
/// Discriminator convs D_conv1..4 (5x5).
inline constexpr std::size_t kGdnChannels[4] = {64, 128, 256, 512};
inline constexpr std::size_t kGdnStride[4] = {2, 2, 2, 1};
inline constexpr std::size_t kGdnKernel = 5;

/// Expected output shape of every named layer for a batch of `batch` images
/// (generator/discriminator rows are for `batch * fonts` pairs), in forward
/// execution order. Names match the trace emitted by the model.
struct LayerShape {
  std::string name;
  Shape shape;
};
std::vector<LayerShape> expected_shapes(const NetworkConfig& config, std::size_t batch);

}  // namespace cgrn
