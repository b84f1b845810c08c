#include "cgrn/sample.hpp"

#include <limits>
#include <stdexcept>

namespace cgrn {

CanonicalSet::CanonicalSet(int classes, std::vector<SynthFont> fonts, std::size_t size) : classes_(classes) {
  if (fonts.empty()) throw std::invalid_argument("canonical set needs at least one target font");
  for (const SynthFont& f : fonts) {
    std::vector<std::shared_ptr<const Image>> per_class;
    for (int c = 0; c < classes; ++c) per_class.push_back(std::make_shared<const Image>(render_canonical(c, f, size)));
    images_.push_back(std::move(per_class));
  }
}

CanonicalSet::CanonicalSet(std::vector<std::vector<std::shared_ptr<const Image>>> images) : images_(std::move(images)) {
  if (images_.empty()) throw std::invalid_argument("canonical set needs at least one target font");
  classes_ = static_cast<int>(images_[0].size());
  for (const auto& f : images_) {
    if (static_cast<int>(f.size()) != classes_) throw std::invalid_argument("canonical set: ragged class lists");
  }
}

const std::shared_ptr<const Image>& CanonicalSet::get(int cls, std::size_t font) const {
  if (cls < 0 || cls >= classes_ || font >= images_.size()) {
    throw std::out_of_range("no canonical glyph for class " + std::to_string(cls) + " font " + std::to_string(font));
  }
  return images_[font][static_cast<std::size_t>(cls)];
}

void attach_targets(Sample& s, const CanonicalSet& canon) {
  s.targets.clear();
  s.font_perm.clear();
  for (std::size_t f = 0; f < canon.fonts(); ++f) {
    s.targets.push_back(canon.get(s.label, f));
    s.font_perm.push_back(f);
  }
}

std::uint64_t draw_below(std::uint64_t bound, std::mt19937_64& rng) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::vector<std::size_t> draw_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[draw_below(i, rng)]);
  return p;
}

Sample shuffle_fonts(Sample sample, std::mt19937_64& rng) {
  const std::size_t m = sample.slots();
  if (m == 0 || sample.font_perm.size() != m) throw std::invalid_argument("shuffle_fonts: sample has no font slots");
  const auto p = draw_permutation(m, rng);
  auto perm = sample.font_perm;
  auto targets = sample.targets;
  for (std::size_t j = 0; j < m; ++j) {
    sample.font_perm[j] = perm[p[j]];
    sample.targets[j] = targets[p[j]];
  }
  return sample;
}

}  // namespace cgrn
