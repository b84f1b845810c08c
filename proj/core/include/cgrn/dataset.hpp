#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cgrn/corruption.hpp"
#include "cgrn/sample.hpp"

namespace cgrn {

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  std::vector<std::string> font_names;  // target fonts, in slot-index order
  std::shared_ptr<const CanonicalSet> canon;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  int classes() const { return static_cast<int>(class_names.size()); }
  std::size_t fonts() const { return font_names.size(); }
};

/// Synthetic corpus layout. Font ids refer to SynthFont::catalog.
struct DataConfig {
  int classes = 36;
  std::vector<int> target_fonts{0, 1, 2, 3};
  std::vector<int> train_fonts{4, 5, 6};
  std::vector<int> novel_fonts{7};
  int corruptions_per = 50;  // train scenes per (class, train font)
  int test_per = 5;          // test_iid scenes per (class, train font)
  int novel_per = 10;        // test_novel_font scenes per (class, novel font)
  CorruptionSpec corruption;
  std::uint64_t seed = 1;
  std::size_t image_size = 64;

  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset test_iid;
  Dataset test_novel_font;
};

/// Scenes are enumerated class-major, then font, then repetition; scene i of
/// a split uses seed mix(seed, split, i), so every sample is independent of
/// generation order. The target fonts form the canonical set of all splits.
Splits make_splits(const DataConfig& config);

/// One named split of a corpus on disk.
struct Corpus {
  std::map<std::string, Dataset> splits;
  std::vector<std::string> class_names;
  std::vector<std::string> font_names;
  std::shared_ptr<const CanonicalSet> canon;
};

Corpus to_corpus(const Splits& splits);

/// Writes manifest.txt, targets/<font>/<class>.ppm and <split>/<class>/<id>.ppm,
/// plus <split>/index.txt recording sample order, seeds and slot permutations.
void export_corpus(const std::filesystem::path& dir, const Corpus& corpus);

/// Reads the layout written by export_corpus or supplied by a user. Images
/// are resized to `image_size` by bilinear interpolation; classes are indexed
/// by sorted label name. index.txt is optional.
Corpus load_directory(const std::filesystem::path& dir, std::size_t image_size = 64);

}  // namespace cgrn
