#include "cgrn/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>


namespace cgrn {

namespace {

std::uint64_t parse_uint(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::out_of_range&) {
    throw ConfigError("integer out of range: '" + s + "'");
  }
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + s + "'");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(static_cast<int>(parse_uint(item)));
  return out;
}

std::vector<std::string> parse_word_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(item);
  return out;
}

using Check = std::function<void(const std::string&)>;

Check any_string() {
  return [](const std::string&) {};
}
Check uint_check() {
  return [](const std::string& v) { parse_uint(v); };
}
Check uint_or_auto() {
  return [](const std::string& v) {
    if (v != "auto") parse_uint(v);
  };
}
Check real_check() {
  return [](const std::string& v) { parse_double(v); };
}
Check bool_check() {
  return [](const std::string& v) { parse_bool(v); };
}
Check list_check() {
  return [](const std::string& v) { parse_int_list(v); };
}
template <typename F>
Check wrap(F parse) {
  return [parse](const std::string& v) {
    try {
      parse(v);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  };
}

const CorruptionSpec kCorruption;
const DataConfig kData;

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::schema() {
  static const std::vector<Key> keys = [] {
    std::string backgrounds;
    for (std::size_t i = 0; i < kCorruption.backgrounds.size(); ++i) {
      backgrounds += (i ? "," : "") + to_string(kCorruption.backgrounds[i]);
    }
    std::vector<Key> k = {
        {"model.preset", "desk", "layer widths and batch defaults: desk|paper", wrap(parse_preset)},
        {"model.width_mult", "auto", "channel multiplier as a fraction (1/8) or auto from the preset",
         wrap([](const std::string& v) {
           if (v != "auto") Rational::parse(v);
         })},
        {"model.L", "auto", "number of classes, or auto from the data", uint_or_auto()},
        {"model.m", "auto", "number of target fonts, or auto from the data", uint_or_auto()},
        {"model.font_embed_dim", "64", "font embedding width", uint_check()},
        {"model.gan_mode", "minimax", "generator adversarial term: minimax|nonsaturating", wrap(parse_gan_mode)},
        {"model.final_activation", "sigmoid", "generator output activation: sigmoid|relu",
         wrap(parse_final_activation)},
        {"model.ccn_pool", "avg", "classifier global pooling: avg|max", wrap(parse_pool_kind)},
        {"train.lambda", "100", "weight of the recognition and reconstruction terms", real_check()},
        {"train.lr", "0.0001", "Adam learning rate", real_check()},
        {"train.beta1", "0.5", "Adam first-moment decay", real_check()},
        {"train.beta2", "0.999", "Adam second-moment decay", real_check()},
        {"train.eps", "1e-08", "Adam epsilon", real_check()},
        {"train.batch", "auto", "mini-batch size, or auto from the preset (desk 16, paper 128)", uint_or_auto()},
        {"train.epochs", "20", "maximum number of epochs", uint_check()},
        {"train.seed", "1", "initialization and shuffling seed", uint_check()},
        {"train.pixel_norm", "l1", "reconstruction norm: l1|l2", wrap(parse_pixel_norm)},
        {"train.stop_at_accuracy", "0", "stop after an epoch whose test_iid accuracy reaches this (0: never)",
         real_check()},
        {"data.dir", "", "corpus directory; empty for the built-in synthetic corpus", any_string()},
        {"data.corpus_seed", "1", "synthetic corpus seed", uint_check()},
        {"data.classes", std::to_string(kData.classes), "synthetic classes (10-36 typical)", uint_check()},
        {"data.target_fonts", ints(kData.target_fonts), "catalog ids of the canonical target fonts", list_check()},
        {"data.train_fonts", ints(kData.train_fonts), "catalog ids of scene fonts used for train/test_iid",
         list_check()},
        {"data.novel_fonts", ints(kData.novel_fonts), "catalog ids of scene fonts used for test_novel_font",
         list_check()},
        {"data.corruptions_per", std::to_string(kData.corruptions_per), "train scenes per (class, train font)",
         uint_check()},
        {"data.test_per", std::to_string(kData.test_per), "test_iid scenes per (class, train font)", uint_check()},
        {"data.novel_per", std::to_string(kData.novel_per), "test_novel_font scenes per (class, novel font)",
         uint_check()},
        {"data.backgrounds", backgrounds, "background modes drawn from: flat,gradient,noise,patch",
         wrap([](const std::string& v) {
           for (const auto& w : parse_word_list(v)) parse_background(w);
         })},
        {"data.random_colors", "true", "random glyph/background colours", bool_check()},
        {"data.min_luma_gap", num(kCorruption.min_luma_gap), "glyph/background luminance separation", real_check()},
        {"data.blur_max", num(kCorruption.blur_max), "maximum Gaussian blur sigma (px)", real_check()},
        {"data.brightness", num(kCorruption.brightness), "brightness jitter range", real_check()},
        {"data.contrast_min", num(kCorruption.contrast_min), "minimum contrast gain", real_check()},
        {"data.contrast_max", num(kCorruption.contrast_max), "maximum contrast gain", real_check()},
        {"data.rotation_deg", num(kCorruption.rotation_deg), "rotation jitter range (degrees)", real_check()},
        {"data.translation_px", num(kCorruption.translation_px), "translation jitter range (px)", real_check()},
        {"data.scale_jitter", num(kCorruption.scale_jitter), "relative glyph scale jitter", real_check()},
        {"data.occlusion_prob", num(kCorruption.occlusion_prob), "probability of an occluding patch", real_check()},
        {"data.noise_sigma", num(kCorruption.noise_sigma), "maximum pixel noise sigma", real_check()},
        {"data.contrast_floor", num(kCorruption.contrast_floor), "minimum glyph/background contrast", real_check()},
        {"ablation.no_ggn", "false", "drop the glyph generator (and with it the discriminator)", bool_check()},
        {"ablation.no_gdn", "false", "drop the discriminator", bool_check()},
        {"ablation.single_font", "false", "train with the first target font only", bool_check()},
        {"io.out_dir", "runs/default", "run directory", any_string()},
        {"io.checkpoint_every", "0", "checkpoint period in steps (0: end of training only)", uint_check()},
        {"io.metrics_format", "kv", "metrics line format: kv|json", wrap(parse_metrics_format)},
        {"io.wallclock", "false", "record elapsed time in metrics (breaks byte-identical reruns)", bool_check()},
        {"io.grid_samples", "4", "rows in the per-epoch sample grid", uint_check()},
    };
    std::sort(k.begin(), k.end(), [](const Key& a, const Key& b) { return a.name < b.name; });
    return k;
  }();
  return keys;
}

RunConfig::RunConfig() {
  for (const Key& k : schema()) values_[k.name] = k.default_value;
}

std::string RunConfig::resolve_key(const std::string& name) const {
  if (values_.count(name)) return name;
  std::vector<std::string> matches;
  for (const auto& [key, value] : values_) {
    if (key.size() > name.size() && key.compare(key.size() - name.size(), name.size(), name) == 0 &&
        key[key.size() - name.size() - 1] == '.') {
      matches.push_back(key);
    }
  }
  if (matches.size() == 1) return matches[0];
  if (matches.empty()) throw ConfigError("unknown configuration key '" + name + "'");
  std::string list;
  for (const auto& m : matches) list += " " + m;
  throw ConfigError("ambiguous configuration key '" + name + "':" + list);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string full = resolve_key(key);
  const auto it = std::find_if(schema().begin(), schema().end(), [&](const Key& k) { return k.name == full; });
  try {
    it->check(value);
  } catch (const std::exception& e) {
    throw ConfigError(full + ": " + e.what());
  }
  values_[full] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  load_text(ss.str(), path.string());
}

void RunConfig::apply_environment() {
  if (const char* seed = std::getenv("CGRN_SEED"); seed && *seed) {
    try {
      set("train.seed", seed);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("CGRN_SEED: ") + e.what());
    }
  }
}

void RunConfig::resolve(std::size_t data_classes, std::size_t data_fonts) {
  const bool single = parse_bool(get("ablation.single_font"));
  const std::size_t fonts = single ? 1 : data_fonts;
  auto settle = [&](const std::string& key, std::size_t derived, const std::string& what) {
    if (get(key) == "auto") {
      values_[key] = std::to_string(derived);
    } else if (parse_uint(get(key)) != derived) {
      throw ConfigError(key + "=" + get(key) + " does not match the " + std::to_string(derived) + " " + what);
    }
  };
  settle("model.L", data_classes, "classes in the data");
  settle("model.m", fonts, single ? "font of a single-font run" : "target fonts in the data");
  const Preset preset = parse_preset(get("model.preset"));
  if (get("model.width_mult") == "auto") values_["model.width_mult"] = preset == Preset::Paper ? "1/1" : "1/8";
  if (get("train.batch") == "auto") values_["train.batch"] = preset == Preset::Paper ? "128" : "16";
}

bool RunConfig::resolved() const {
  return std::none_of(values_.begin(), values_.end(), [](const auto& kv) { return kv.second == "auto"; });
}

NetworkConfig RunConfig::network() const {
  if (!resolved()) throw ConfigError("network(): configuration has unresolved auto keys");
  const Preset preset = parse_preset(get("model.preset"));
  const std::size_t classes = parse_uint(get("model.L")), fonts = parse_uint(get("model.m"));
  NetworkConfig n = preset == Preset::Paper ? NetworkConfig::paper(classes, fonts) : NetworkConfig::desk(classes, fonts);
  n.width_mult = Rational::parse(get("model.width_mult"));
  n.font_embed_dim = parse_uint(get("model.font_embed_dim"));
  n.gan_mode = parse_gan_mode(get("model.gan_mode"));
  n.final_activation = parse_final_activation(get("model.final_activation"));
  n.ccn_pool = parse_pool_kind(get("model.ccn_pool"));
  try {
    n.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return n;
}

TrainConfig RunConfig::train() const {
  if (!resolved()) throw ConfigError("train(): configuration has unresolved auto keys");
  TrainConfig t;
  t.lambda = static_cast<Real>(parse_double(get("train.lambda")));
  t.adam.lr = static_cast<Real>(parse_double(get("train.lr")));
  t.adam.beta1 = static_cast<Real>(parse_double(get("train.beta1")));
  t.adam.beta2 = static_cast<Real>(parse_double(get("train.beta2")));
  t.adam.eps = static_cast<Real>(parse_double(get("train.eps")));
  t.batch = parse_uint(get("train.batch"));
  t.epochs = static_cast<int>(parse_uint(get("train.epochs")));
  t.seed = parse_uint(get("train.seed"));
  t.pixel_norm = parse_pixel_norm(get("train.pixel_norm"));
  t.ablation.no_ggn = parse_bool(get("ablation.no_ggn"));
  t.ablation.no_gdn = parse_bool(get("ablation.no_gdn")) || t.ablation.no_ggn;
  t.ablation.single_font = parse_bool(get("ablation.single_font"));
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return t;
}

DataConfig RunConfig::data() const {
  DataConfig d;
  d.seed = parse_uint(get("data.corpus_seed"));
  d.classes = static_cast<int>(parse_uint(get("data.classes")));
  d.target_fonts = parse_int_list(get("data.target_fonts"));
  d.train_fonts = parse_int_list(get("data.train_fonts"));
  d.novel_fonts = parse_int_list(get("data.novel_fonts"));
  d.corruptions_per = static_cast<int>(parse_uint(get("data.corruptions_per")));
  d.test_per = static_cast<int>(parse_uint(get("data.test_per")));
  d.novel_per = static_cast<int>(parse_uint(get("data.novel_per")));
  CorruptionSpec& c = d.corruption;
  c.backgrounds.clear();
  for (const auto& w : parse_word_list(get("data.backgrounds"))) c.backgrounds.push_back(parse_background(w));
  c.random_colors = parse_bool(get("data.random_colors"));
  c.min_luma_gap = parse_double(get("data.min_luma_gap"));
  c.blur_max = parse_double(get("data.blur_max"));
  c.brightness = parse_double(get("data.brightness"));
  c.contrast_min = parse_double(get("data.contrast_min"));
  c.contrast_max = parse_double(get("data.contrast_max"));
  c.rotation_deg = parse_double(get("data.rotation_deg"));
  c.translation_px = parse_double(get("data.translation_px"));
  c.scale_jitter = parse_double(get("data.scale_jitter"));
  c.occlusion_prob = parse_double(get("data.occlusion_prob"));
  c.noise_sigma = parse_double(get("data.noise_sigma"));
  c.contrast_floor = parse_double(get("data.contrast_floor"));
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return d;
}

IoConfig RunConfig::io() const {
  IoConfig io;
  io.out_dir = get("io.out_dir");
  io.checkpoint_every = parse_uint(get("io.checkpoint_every"));
  io.metrics_format = parse_metrics_format(get("io.metrics_format"));
  io.wallclock = parse_bool(get("io.wallclock"));
  io.grid_samples = parse_uint(get("io.grid_samples"));
  return io;
}

std::filesystem::path RunConfig::data_dir() const { return get("data.dir"); }

double RunConfig::stop_at_accuracy() const { return parse_double(get("train.stop_at_accuracy")); }

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

}  // namespace cgrn
