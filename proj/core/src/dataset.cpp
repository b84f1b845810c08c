#include "cgrn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cgrn/glyphs.hpp"
#include "cgrn/rng.hpp"

namespace cgrn {

namespace fs = std::filesystem;

namespace {

enum SplitTag : std::uint64_t { kTrain = 0, kTestIid = 1, kTestNovel = 2 };

Dataset generate_split(const DataConfig& cfg, const std::shared_ptr<const CanonicalSet>& canon,
                       const std::vector<int>& fonts, int per, SplitTag tag,
                       const std::vector<std::string>& class_names, const std::vector<std::string>& font_names) {
  Dataset d;
  d.class_names = class_names;
  d.font_names = font_names;
  d.canon = canon;
  d.samples.reserve(static_cast<std::size_t>(cfg.classes) * fonts.size() * static_cast<std::size_t>(per));
  std::uint64_t index = 0;
  for (int cls = 0; cls < cfg.classes; ++cls) {
    for (int f : fonts) {
      const SynthFont font = SynthFont::catalog(f);
      for (int k = 0; k < per; ++k, ++index) {
        d.samples.push_back(
            synth_scene(cls, font, cfg.corruption, mix_seed(cfg.seed, {tag, index}), *canon, cfg.image_size));
      }
    }
  }
  return d;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing manifest " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<std::string> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void DataConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("data: " + what); };
  if (classes < 1 || classes > kMaxClasses) fail("classes must lie in [1, " + std::to_string(kMaxClasses) + "]");
  if (target_fonts.empty()) fail("at least one target font required");
  if (train_fonts.empty()) fail("at least one train font required");
  if (corruptions_per < 1 || test_per < 0 || novel_per < 0) fail("per-cell sample counts must be positive");
  auto check_ids = [&](const std::vector<int>& ids, const char* what) {
    std::set<int> seen;
    for (int id : ids) {
      if (id < 0 || id >= SynthFont::catalog_size()) fail(std::string(what) + " font id " + std::to_string(id) + " unknown");
      if (!seen.insert(id).second) fail(std::string(what) + " font id " + std::to_string(id) + " repeated");
    }
  };
  check_ids(target_fonts, "target");
  check_ids(train_fonts, "train");
  check_ids(novel_fonts, "novel");
  for (int a : train_fonts) {
    if (std::find(novel_fonts.begin(), novel_fonts.end(), a) != novel_fonts.end()) {
      fail("font " + std::to_string(a) + " is in both the train and novel pools");
    }
  }
  if (image_size < 16) fail("image_size must be >= 16");
  corruption.validate();
}

Splits make_splits(const DataConfig& cfg) {
  cfg.validate();
  std::vector<SynthFont> targets;
  std::vector<std::string> font_names;
  for (int f : cfg.target_fonts) {
    targets.push_back(SynthFont::catalog(f));
    font_names.push_back(targets.back().name);
  }
  std::vector<std::string> class_names;
  for (int c = 0; c < cfg.classes; ++c) class_names.push_back(class_label(c));
  auto canon = std::make_shared<const CanonicalSet>(cfg.classes, targets, cfg.image_size);

  Splits s;
  s.train = generate_split(cfg, canon, cfg.train_fonts, cfg.corruptions_per, kTrain, class_names, font_names);
  s.test_iid = generate_split(cfg, canon, cfg.train_fonts, cfg.test_per, kTestIid, class_names, font_names);
  s.test_novel_font = generate_split(cfg, canon, cfg.novel_fonts, cfg.novel_per, kTestNovel, class_names, font_names);
  return s;
}

Corpus to_corpus(const Splits& splits) {
  Corpus c;
  c.class_names = splits.train.class_names;
  c.font_names = splits.train.font_names;
  c.canon = splits.train.canon;
  c.splits["train"] = splits.train;
  c.splits["test_iid"] = splits.test_iid;
  c.splits["test_novel_font"] = splits.test_novel_font;
  return c;
}

void export_corpus(const fs::path& dir, const Corpus& corpus) {
  if (!corpus.canon) throw std::invalid_argument("export_corpus: corpus has no canonical targets");
  fs::create_directories(dir);
  {
    std::ofstream m(dir / "manifest.txt");
    m << "classes=" << join(corpus.class_names) << "\n";
    m << "fonts=" << join(corpus.font_names) << "\n";
    m << "m=" << corpus.font_names.size() << "\n";
    for (const auto& [name, d] : corpus.splits) m << "count." << name << "=" << d.size() << "\n";
    if (!m) throw std::runtime_error("cannot write manifest in " + dir.string());
  }
  for (std::size_t f = 0; f < corpus.font_names.size(); ++f) {
    const fs::path fd = dir / "targets" / corpus.font_names[f];
    fs::create_directories(fd);
    for (int c = 0; c < corpus.canon->classes(); ++c) {
      write_ppm(fd / (corpus.class_names[static_cast<std::size_t>(c)] + ".ppm"), *corpus.canon->get(c, f));
    }
  }
  for (const auto& [name, d] : corpus.splits) {
    const fs::path sd = dir / name;
    fs::create_directories(sd);
    std::ofstream index(sd / "index.txt");
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      const Sample& s = d.samples[i];
      const std::string& label = corpus.class_names.at(static_cast<std::size_t>(s.label));
      std::ostringstream id;
      id.width(6);
      id.fill('0');
      id << i;
      fs::create_directories(sd / label);
      write_ppm(sd / label / (id.str() + ".ppm"), s.x);
      index << label << "/" << id.str() << ".ppm " << s.seed << " " << s.scene_font << " ";
      for (std::size_t j = 0; j < s.font_perm.size(); ++j) index << (j ? "," : "") << s.font_perm[j];
      index << "\n";
    }
    if (!index) throw std::runtime_error("cannot write index for split " + name);
  }
}

Corpus load_directory(const fs::path& dir, std::size_t image_size) {
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus directory " + dir.string() + " does not exist");
  const auto manifest = read_manifest(dir / "manifest.txt");
  const fs::path tdir = dir / "targets";
  if (!fs::is_directory(tdir)) throw std::runtime_error("corpus " + dir.string() + " has no targets/ directory");

  std::vector<std::string> fonts;
  if (auto it = manifest.find("fonts"); it != manifest.end()) {
    fonts = split_list(it->second);
  } else {
    fonts = sorted_entries(tdir, true);
  }
  if (fonts.empty()) throw std::runtime_error("corpus " + dir.string() + " lists no target fonts");
  if (auto it = manifest.find("m"); it != manifest.end() && std::stoul(it->second) != fonts.size()) {
    throw std::runtime_error("manifest m=" + it->second + " but " + std::to_string(fonts.size()) + " fonts listed");
  }

  std::vector<std::string> split_names;
  for (const auto& name : sorted_entries(dir, true)) {
    if (name != "targets") split_names.push_back(name);
  }

  std::set<std::string> discovered;
  for (const auto& f : fonts) {
    if (!fs::is_directory(tdir / f)) throw std::runtime_error("missing target font directory targets/" + f);
    for (const auto& file : sorted_entries(tdir / f, false)) {
      if (fs::path(file).extension() == ".ppm") discovered.insert(fs::path(file).stem().string());
    }
  }
  for (const auto& s : split_names) {
    for (const auto& c : sorted_entries(dir / s, true)) discovered.insert(c);
  }
  const std::vector<std::string> classes(discovered.begin(), discovered.end());
  if (auto it = manifest.find("classes"); it != manifest.end()) {
    const auto listed = split_list(it->second);
    if (listed.size() != classes.size()) {
      throw std::runtime_error("manifest lists " + std::to_string(listed.size()) + " classes but " +
                               std::to_string(classes.size()) + " were discovered");
    }
  }

  std::vector<std::vector<std::shared_ptr<const Image>>> images;
  for (const auto& f : fonts) {
    std::vector<std::shared_ptr<const Image>> per_class;
    for (const auto& c : classes) {
      const fs::path p = tdir / f / (c + ".ppm");
      if (!fs::is_regular_file(p)) throw std::runtime_error("missing target for font '" + f + "', class '" + c + "'");
      per_class.push_back(std::make_shared<const Image>(resize_bilinear(read_ppm(p), image_size, image_size)));
    }
    images.push_back(std::move(per_class));
  }

  Corpus corpus;
  corpus.class_names = classes;
  corpus.font_names = fonts;
  corpus.canon = std::make_shared<const CanonicalSet>(std::move(images));
  auto class_index = [&](const std::string& label) {
    return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
  };

  for (const auto& split : split_names) {
    Dataset d;
    d.class_names = classes;
    d.font_names = fonts;
    d.canon = corpus.canon;
    const fs::path sd = dir / split;
    auto load_sample = [&](const std::string& label, const fs::path& file) {
      Sample s;
      s.label = class_index(label);
      s.x = resize_bilinear(read_ppm(file), image_size, image_size);
      attach_targets(s, *corpus.canon);
      return s;
    };
    if (fs::is_regular_file(sd / "index.txt")) {
      std::ifstream is(sd / "index.txt");
      std::string line;
      while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string rel, perm;
        Sample proto;
        ls >> rel >> proto.seed >> proto.scene_font >> perm;
        if (!ls) throw std::runtime_error(split + "/index.txt: malformed line '" + line + "'");
        const std::string label = fs::path(rel).parent_path().string();
        Sample s = load_sample(label, sd / rel);
        s.seed = proto.seed;
        s.scene_font = proto.scene_font;
        const auto order = split_list(perm);
        if (order.size() != fonts.size()) throw std::runtime_error(split + "/index.txt: permutation size mismatch");
        for (std::size_t j = 0; j < order.size(); ++j) {
          const std::size_t f = std::stoul(order[j]);
          if (f >= fonts.size()) throw std::runtime_error(split + "/index.txt: font slot out of range");
          s.font_perm[j] = f;
          s.targets[j] = corpus.canon->get(s.label, f);
        }
        d.samples.push_back(std::move(s));
      }
    } else {
      for (const auto& label : sorted_entries(sd, true)) {
        for (const auto& file : sorted_entries(sd / label, false)) {
          if (fs::path(file).extension() != ".ppm") continue;
          d.samples.push_back(load_sample(label, sd / label / file));
        }
      }
    }
    corpus.splits[split] = std::move(d);
  }
  return corpus;
}

}  // namespace cgrn
