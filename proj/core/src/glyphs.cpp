#include "cgrn/glyphs.hpp"

#include <cmath>
#include <stdexcept>

namespace cgrn {

namespace {

using Bitmap = std::array<const char*, kGlyphRows>;

// clang-format off
const std::array<Bitmap, kMaxClasses> kBitmaps = {{
  {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},  // 0
  {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},  // 1
  {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},  // 2
  {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},  // 3
  {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},  // 4
  {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},  // 5
  {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},  // 6
  {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},  // 7
  {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},  // 8
  {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},  // 9
  {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},  // A
  {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."},  // B
  {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."},  // C
  {"###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."},  // D
  {"#####", "#....", "#....", "####.", "#....", "#....", "#####"},  // E
  {"#####", "#....", "#....", "####.", "#....", "#....", "#...."},  // F
  {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"},  // G
  {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},  // H
  {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."},  // I
  {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."},  // J
  {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"},  // K
  {"#....", "#....", "#....", "#....", "#....", "#....", "#####"},  // L
  {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"},  // M
  {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"},  // N
  {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},  // O
  {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."},  // P
  {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"},  // Q
  {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"},  // R
  {".####", "#....", "#....", ".###.", "....#", "....#", "####."},  // S
  {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."},  // T
  {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},  // U
  {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."},  // V
  {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."},  // W
  {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"},  // X
  {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."},  // Y
  {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"},  // Z
}};
// clang-format on

void check_class(int cls) {
  if (cls < 0 || cls >= kMaxClasses) {
    throw std::out_of_range("glyph class " + std::to_string(cls) + " outside [0, " + std::to_string(kMaxClasses) + ")");
  }
}

bool ink(const Bitmap& b, int row, int col) {
  return row >= 0 && row < kGlyphRows && col >= 0 && col < kGlyphCols && b[row][col] == '#';
}

struct Link {
  int r0, c0, r1, c1;
};

std::vector<Link> links(const Bitmap& b) {
  std::vector<Link> out;
  for (int r = 0; r < kGlyphRows; ++r) {
    for (int c = 0; c < kGlyphCols; ++c) {
      if (!ink(b, r, c)) continue;
      if (ink(b, r, c + 1)) out.push_back({r, c, r, c + 1});
      if (ink(b, r + 1, c)) out.push_back({r, c, r + 1, c});
      if (ink(b, r + 1, c + 1) && !ink(b, r, c + 1) && !ink(b, r + 1, c)) out.push_back({r, c, r + 1, c + 1});
      if (ink(b, r + 1, c - 1) && !ink(b, r, c - 1) && !ink(b, r + 1, c)) out.push_back({r, c, r + 1, c - 1});
    }
  }
  return out;
}

}  // namespace

std::string class_label(int cls) {
  check_class(cls);
  return std::string(1, cls < 10 ? static_cast<char>('0' + cls) : static_cast<char>('A' + cls - 10));
}

const std::array<const char*, kGlyphRows>& glyph_bitmap(int cls) {
  check_class(cls);
  return kBitmaps[static_cast<std::size_t>(cls)];
}

std::vector<Segment> glyph_skeleton(int cls) {
  const Bitmap& b = glyph_bitmap(cls);
  std::vector<Segment> segs;
  std::vector<int> degree(kGlyphRows * kGlyphCols, 0);
  for (const Link& l : links(b)) {
    segs.push_back({double(l.c0), double(l.r0), double(l.c1), double(l.r1)});
    ++degree[l.r0 * kGlyphCols + l.c0];
    ++degree[l.r1 * kGlyphCols + l.c1];
  }
  for (int r = 0; r < kGlyphRows; ++r) {
    for (int c = 0; c < kGlyphCols; ++c) {
      if (ink(b, r, c) && degree[r * kGlyphCols + c] == 0) segs.push_back({double(c), double(r), double(c), double(r)});
    }
  }
  return segs;
}

std::vector<Terminal> glyph_terminals(int cls) {
  const Bitmap& b = glyph_bitmap(cls);
  std::vector<int> degree(kGlyphRows * kGlyphCols, 0);
  std::vector<Link> partner(kGlyphRows * kGlyphCols);
  for (const Link& l : links(b)) {
    ++degree[l.r0 * kGlyphCols + l.c0];
    ++degree[l.r1 * kGlyphCols + l.c1];
    partner[l.r0 * kGlyphCols + l.c0] = l;
    partner[l.r1 * kGlyphCols + l.c1] = {l.r1, l.c1, l.r0, l.c0};
  }
  std::vector<Terminal> out;
  for (int r = 0; r < kGlyphRows; ++r) {
    for (int c = 0; c < kGlyphCols; ++c) {
      const int i = r * kGlyphCols + c;
      if (degree[i] != 1) continue;
      const Link& l = partner[i];  // oriented with (r0, c0) at this cell
      const double dx = l.c0 - l.c1, dy = l.r0 - l.r1;
      const double n = std::hypot(dx, dy);
      out.push_back({double(c), double(r), dx / n, dy / n});
    }
  }
  return out;
}

}  // namespace cgrn
