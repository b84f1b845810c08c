#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgrn/dataset.hpp"
#include "cgrn/metrics.hpp"
#include "cgrn/network_config.hpp"
#include "cgrn/trainer.hpp"

namespace cgrn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IoConfig {
  std::filesystem::path out_dir = "runs/default";
  std::uint64_t checkpoint_every = 0;  // 0: only at the end
  MetricsFormat metrics_format = MetricsFormat::KeyValue;
  bool wallclock = false;
  std::size_t grid_samples = 4;
};

/// Flat key=value run configuration. Every key has a default; unknown keys
/// and unparsable values are rejected when set. Keys whose default is "auto"
/// are derived from the preset or the data once resolve() has run.
class RunConfig {
 public:
  struct Key {
    std::string name;
    std::string default_value;
    std::string help;
    std::function<void(const std::string&)> check;  // throws on invalid values
  };

  RunConfig();

  static const std::vector<Key>& schema();

  /// Accepts a full key or a suffix that names exactly one key
  /// ("seed" -> "train.seed").
  std::string resolve_key(const std::string& name) const;

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  /// Lines of key=value; blank lines and lines starting with '#' are skipped.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");
  /// Applies CGRN_SEED (if set) to train.seed.
  void apply_environment();

  /// Fills every "auto" key: model.L and model.m from the data, width and
  /// batch from the preset. Explicit values must agree with the data.
  void resolve(std::size_t data_classes, std::size_t data_fonts);
  bool resolved() const;

  NetworkConfig network() const;
  TrainConfig train() const;
  DataConfig data() const;
  IoConfig io() const;
  std::filesystem::path data_dir() const;  // empty for synthetic data
  double stop_at_accuracy() const;

  /// All keys, sorted, one key=value per line; a valid input file.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cgrn
