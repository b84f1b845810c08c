#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cgrn/image.hpp"
#include "cgrn/synth_font.hpp"

namespace cgrn {

/// Canonical renderings of every class in each target font, shared by all
/// samples that reference them.
class CanonicalSet {
 public:
  CanonicalSet() = default;
  CanonicalSet(int classes, std::vector<SynthFont> fonts, std::size_t size = 64);
  /// Wraps already rendered images: images[font][cls].
  CanonicalSet(std::vector<std::vector<std::shared_ptr<const Image>>> images);

  int classes() const { return classes_; }
  std::size_t fonts() const { return images_.size(); }
  const std::shared_ptr<const Image>& get(int cls, std::size_t font) const;

 private:
  int classes_ = 0;
  std::vector<std::vector<std::shared_ptr<const Image>>> images_;
};

/// One training or test example. Slot j pairs font embedding font_perm[j]
/// with targets[j], the canonical glyph of `label` in that target font.
/// Font indices are 0-based positions in the target-font list.
struct Sample {
  Image x;
  int label = 0;
  std::vector<std::shared_ptr<const Image>> targets;
  std::vector<std::size_t> font_perm;
  std::uint64_t seed = 0;
  int scene_font = -1;  // -1 when unknown (loaded from disk)
  double contrast = 0.0;
  bool above_floor = true;

  std::size_t slots() const { return targets.size(); }
};

/// Builds the identity-ordered slot list for `label`.
void attach_targets(Sample& s, const CanonicalSet& canon);

/// Draws a uniform permutation p and applies it jointly:
/// font_perm'[j] = font_perm[p[j]], targets'[j] = targets[p[j]].
Sample shuffle_fonts(Sample sample, std::mt19937_64& rng);

/// Uniform permutation of 0..n-1 (Fisher-Yates, portable across standard
/// libraries).
std::vector<std::size_t> draw_permutation(std::size_t n, std::mt19937_64& rng);
std::uint64_t draw_below(std::uint64_t bound, std::mt19937_64& rng);

}  // namespace cgrn
