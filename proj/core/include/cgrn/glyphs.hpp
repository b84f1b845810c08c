#pragma once

#include <array>
#include <string>
#include <vector>

namespace cgrn {

inline constexpr int kGlyphCols = 5;
inline constexpr int kGlyphRows = 7;
inline constexpr int kMaxClasses = 36;  // 0-9 then A-Z

/// Label string of a built-in class ("0".."9", "A".."Z"); throws
/// std::out_of_range for an unknown class.
std::string class_label(int cls);

/// 7 rows of 5 characters, '#' for ink.
const std::array<const char*, kGlyphRows>& glyph_bitmap(int cls);

/// Stroke centre line in cell coordinates (x = column, y = row, cell centres
/// at integers). A point stroke has identical endpoints.
struct Segment {
  double x0, y0, x1, y1;
};

/// Strokes linking every pair of 4-adjacent ink cells, plus diagonal links
/// between ink cells that are not already joined through a shared neighbour.
std::vector<Segment> glyph_skeleton(int cls);

/// Cells with exactly one link, with the unit direction pointing away from
/// the stroke: used to attach serifs.
struct Terminal {
  double x, y, dx, dy;
};
std::vector<Terminal> glyph_terminals(int cls);

}  // namespace cgrn
