#include "cgrn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "cgrn/graph.hpp"
#include "cgrn/metrics.hpp"
#include "cgrn/trainer.hpp"

namespace cgrn {

EvalReport evaluate(Cgrn& model, const Dataset& data, const std::string& split, const EvalOptions& options) {
  const NetworkConfig& nc = model.config();
  if (static_cast<std::size_t>(data.classes()) != nc.num_classes) {
    throw std::invalid_argument("model has " + std::to_string(nc.num_classes) + " classes, split '" + split +
                                "' has " + std::to_string(data.classes()));
  }
  Graph::Pause pause;
  EvalReport r;
  r.split = split;
  for (const auto& name : data.class_names) r.per_class.push_back({name, 0, 0});
  std::map<std::pair<int, int>, std::size_t> confusion;
  const bool pixel = options.pixel && !data.empty();
  double pixel_sum = 0;
  const std::size_t m = nc.num_fonts;

  for (std::size_t start = 0; start < data.size(); start += options.batch) {
    const std::size_t n = std::min(options.batch, data.size() - start);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = start + i;
    const Batch batch = make_batch(data, idx, m);
    const FeaturePyramid pyr = model.extract(batch.x, ops::Mode::Eval);
    const auto pred = predict(model.classify(pyr));
    std::vector<double> per_sample(n, 0.0);
    if (pixel) {
      const Tensor gen = model.generate_slots(pyr, batch.fonts, m, ops::Mode::Eval);
      const std::size_t plane = gen.numel() / gen.dim(0);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t b = 0; b < n; ++b) {
          const Real* g = gen.ptr() + (j * n + b) * plane;
          const Real* t = batch.targets.ptr() + (j * n + b) * plane;
          double s = 0;
          for (std::size_t i = 0; i < plane; ++i) s += std::abs(static_cast<double>(g[i] - t[i]));
          per_sample[b] += s / static_cast<double>(plane) / static_cast<double>(m);
        }
      }
    }
    for (std::size_t b = 0; b < n; ++b) {
      Prediction p;
      p.index = start + b;
      p.label = batch.labels[b];
      p.predicted = pred[b];
      if (pixel) {
        p.l_pixel = per_sample[b];
        pixel_sum += per_sample[b];
      }
      auto& row = r.per_class.at(static_cast<std::size_t>(p.label));
      ++row.total;
      ++r.total;
      if (p.predicted == p.label) {
        ++row.correct;
        ++r.correct;
      } else {
        ++confusion[{p.label, p.predicted}];
      }
      r.predictions.push_back(p);
    }
  }
  r.accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
  if (pixel) r.mean_l_pixel = pixel_sum / static_cast<double>(r.total);

  std::vector<std::pair<std::pair<int, int>, std::size_t>> pairs(confusion.begin(), confusion.end());
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < std::min(options.top_k, pairs.size()); ++i) {
    r.top_confusions.push_back({data.class_names[static_cast<std::size_t>(pairs[i].first.first)],
                                data.class_names[static_cast<std::size_t>(pairs[i].first.second)], pairs[i].second});
  }
  return r;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "section,key,count,total,value\n";
  for (const EvalReport& r : reports) {
    os << "accuracy," << r.split << "," << r.correct << "," << r.total << "," << format_real(r.accuracy) << "\n";
    if (r.mean_l_pixel) os << "mean_l_pixel," << r.split << ",,," << format_real(*r.mean_l_pixel) << "\n";
    for (const auto& c : r.per_class) {
      const double acc = c.total ? static_cast<double>(c.correct) / static_cast<double>(c.total) : 0.0;
      os << "class_accuracy," << r.split << "/" << c.label << "," << c.correct << "," << c.total << ","
         << format_real(acc) << "\n";
    }
    for (const auto& c : r.top_confusions) {
      os << "confusion," << r.split << "/" << c.label << "->" << c.predicted << "," << c.count << "," << r.total
         << ",\n";
    }
  }
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "split,index,label,predicted,correct,l_pixel\n";
  for (const EvalReport& r : reports) {
    for (const Prediction& p : r.predictions) {
      os << r.split << "," << p.index << "," << p.label << "," << p.predicted << "," << (p.label == p.predicted)
         << "," << (p.l_pixel ? format_real(*p.l_pixel) : "") << "\n";
    }
  }
}

Image compose_grid(const std::vector<std::vector<Image>>& rows, std::size_t gutter) {
  if (rows.empty() || rows[0].empty()) throw std::invalid_argument("compose_grid: no tiles");
  const std::size_t tw = rows[0][0].width, th = rows[0][0].height;
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  Image out(cols * tw + (cols - 1) * gutter, rows.size() * th + (rows.size() - 1) * gutter, 128);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const Image& tile = rows[r][c];
      if (tile.width != tw || tile.height != th) throw std::invalid_argument("compose_grid: tiles differ in size");
      const std::size_t ox = c * (tw + gutter), oy = r * (th + gutter);
      for (std::size_t y = 0; y < th; ++y) {
        std::copy_n(tile.rgb.begin() + static_cast<std::ptrdiff_t>(y * tw * 3), tw * 3,
                    out.rgb.begin() + static_cast<std::ptrdiff_t>(((oy + y) * out.width + ox) * 3));
      }
    }
  }
  return out;
}

std::vector<Image> generate_glyphs(Cgrn& model, const Image& x, const std::vector<std::size_t>& fonts) {
  if (fonts.empty()) return {};
  Graph::Pause pause;
  Tensor xt(Shape{1, 3, x.height, x.width});
  copy_into(x, xt, 0);
  const FeaturePyramid pyr = model.extract(xt, ops::Mode::Eval);
  const Tensor gen = model.generate_slots(pyr, fonts, fonts.size(), ops::Mode::Eval);
  std::vector<Image> out;
  for (std::size_t j = 0; j < fonts.size(); ++j) out.push_back(to_image(gen, j));
  return out;
}

Image sample_grid(Cgrn& model, const Dataset& data, const std::vector<std::size_t>& indices) {
  const std::size_t m = model.config().num_fonts;
  std::vector<std::size_t> fonts(m);
  for (std::size_t f = 0; f < m; ++f) fonts[f] = f;
  std::vector<std::vector<Image>> rows;
  for (std::size_t i : indices) {
    const Sample& s = data.samples.at(i);
    std::vector<Image> row{s.x};
    for (Image& g : generate_glyphs(model, s.x, fonts)) row.push_back(std::move(g));
    for (std::size_t f = 0; f < m; ++f) row.push_back(*data.canon->get(s.label, f));
    rows.push_back(std::move(row));
  }
  return compose_grid(rows);
}

}  // namespace cgrn
