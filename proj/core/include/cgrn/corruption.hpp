#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgrn/sample.hpp"

namespace cgrn {

enum class Background { Flat, Gradient, NoiseTexture, ImagePatch };

std::string to_string(Background b);
Background parse_background(const std::string& s);

/// Ranges from which each scene draws its degradations. Nothing here refers
/// to the label: corruption cannot change the class.
struct CorruptionSpec {
  std::vector<Background> backgrounds{Background::Flat, Background::Gradient, Background::NoiseTexture,
                                      Background::ImagePatch};
  bool random_colors = true;      // false: black glyph on white
  double min_luma_gap = 0.3;      // drawn glyph/background luminance separation
  double blur_max = 1.0;          // Gaussian sigma, px
  double brightness = 0.1;        // additive shift drawn from [-b, b]
  double contrast_min = 0.75;     // multiplicative contrast around mid-grey
  double contrast_max = 1.15;
  double rotation_deg = 8.0;      // drawn from [-r, r]
  double translation_px = 3.0;    // per axis, drawn from [-t, t]
  double scale_jitter = 0.08;     // glyph scale drawn from [1-s, 1+s]
  double occlusion_prob = 0.15;
  double noise_sigma = 0.04;      // per-pixel Gaussian noise sigma drawn from [0, n]
  double contrast_floor = 0.1;    // minimum mean glyph/background difference
  int max_attempts = 5;

  /// Flat white background, black glyph, no geometric or photometric change.
  static CorruptionSpec identity();
  void validate() const;
};

class DegenerateSampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean luminance difference between glyph pixels (coverage >= 0.5) and
/// background pixels (coverage < 0.05).
double glyph_contrast(const Image& img, const std::vector<double>& coverage);

/// Scene of class `cls` drawn in `font`, degraded per `spec`, with targets
/// from `canon` and a slot permutation drawn from the sample's seed stream.
/// A scene below the contrast floor is redrawn from a derived seed; after
/// spec.max_attempts failures DegenerateSampleError is thrown.
Sample synth_scene(int cls, const SynthFont& font, const CorruptionSpec& spec, std::uint64_t seed,
                   const CanonicalSet& canon, std::size_t size = 64);

}  // namespace cgrn
