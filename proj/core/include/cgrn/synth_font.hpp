#pragma once

#include <string>
#include <vector>

#include "cgrn/image.hpp"

namespace cgrn {

/// Procedural typeface over the built-in bitmap alphabet. Lengths are in
/// pixels of a 64-pixel canvas and scale with the canvas size.
struct SynthFont {
  int id = 0;
  std::string name;
  double stroke_width = 4.0;
  double shear = 0.0;  // horizontal shift per unit of height above the centre
  double scale = 1.0;
  bool serif = false;
  double corner_rounding = 1.0;  // 0 square stroke ends, 1 round

  static int catalog_size();
  /// Built-in font `id`; throws std::out_of_range for unknown ids.
  static SynthFont catalog(int id);
};

/// Rigid placement of the glyph on the canvas, applied after the font's own
/// shear and scale. Rotation is about the canvas centre.
struct GlyphPose {
  double rotation_deg = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double scale = 1.0;
};

/// Anti-aliased ink coverage in [0,1], row-major size x size.
std::vector<double> render_coverage(int cls, const SynthFont& font, std::size_t size, const GlyphPose& pose = {});

/// Dark glyph on a white background.
Image render_canonical(int cls, const SynthFont& font, std::size_t size = 64);

}  // namespace cgrn
