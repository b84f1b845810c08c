#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgrn/dataset.hpp"
#include "cgrn/model.hpp"

namespace cgrn {

struct Prediction {
  std::size_t index = 0;
  int label = 0;
  int predicted = 0;
  std::optional<double> l_pixel;  // mean over fonts, when glyphs were generated
};

struct EvalReport {
  struct ClassRow {
    std::string label;
    std::size_t correct = 0;
    std::size_t total = 0;
  };
  struct Confusion {
    std::string label;
    std::string predicted;
    std::size_t count = 0;
  };

  std::string split;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0;
  std::vector<ClassRow> per_class;
  std::optional<double> mean_l_pixel;
  std::vector<Confusion> top_confusions;  // most frequent off-diagonal pairs
  std::vector<Prediction> predictions;
};

struct EvalOptions {
  std::size_t batch = 32;
  bool pixel = true;  // also generate every font and measure L_pixel
  std::size_t top_k = 10;
};

/// Eval-mode pass over `data`; the prediction is the smallest logit.
EvalReport evaluate(Cgrn& model, const Dataset& data, const std::string& split, const EvalOptions& options = {});

/// CSV with columns section,key,count,total,value.
void write_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
/// CSV with columns split,index,label,predicted,correct,l_pixel.
void write_predictions_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);

inline constexpr std::size_t kGridGutter = 2;

/// Tiles equally sized images row by row, separated by `gutter` grey pixels.
Image compose_grid(const std::vector<std::vector<Image>>& rows, std::size_t gutter = kGridGutter);

/// Glyphs of `x` in each listed font (eval mode).
std::vector<Image> generate_glyphs(Cgrn& model, const Image& x, const std::vector<std::size_t>& fonts);

/// One row per selected sample: input, generated glyph per font, targets.
Image sample_grid(Cgrn& model, const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace cgrn
