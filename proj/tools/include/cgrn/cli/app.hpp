#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgrn/dataset.hpp"
#include "cgrn/evaluation.hpp"
#include "cgrn/run_config.hpp"
#include "cgrn/trainer.hpp"

namespace cgrn::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericError = 3, kVerifyFailure = 4 };

/// Runs `cgrn <command> ...` with argv[0] already stripped.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "--key value", "--key=value" and bare "--flag" (meaning true) pairs.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& args);

/// Precedence from lowest to highest: defaults, CGRN_SEED, the config file,
/// command-line overrides.
RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

/// The corpus named by data.dir, or the synthetic corpus described by data.*.
Corpus load_corpus(const RunConfig& config);

struct TrainSummary {
  LoopResult loop;
  std::vector<double> epoch_accuracy;  // test_iid after each epoch run in this invocation
  std::vector<EvalReport> reports;     // final test_iid and test_novel_font
  std::filesystem::path out_dir;
};

/// Trains into io.out_dir: config.txt, metrics, checkpoint.cgrn (plus
/// periodic step_*.cgrn), grids/epoch_NNN.ppm, epochs.csv, report.csv and
/// predictions.csv. With `resume`, continues from that checkpoint and
/// truncates the metrics and epoch tables to its position.
TrainSummary train(RunConfig config, const Corpus& corpus, const std::optional<std::filesystem::path>& resume,
                   std::ostream& log);

}  // namespace cgrn::cli
