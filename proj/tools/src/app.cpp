#include "cgrn/cli/app.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cgrn/checkpoint.hpp"
#include "cgrn/image.hpp"
#include "cgrn/metrics.hpp"
#include "cgrn/model.hpp"
#include "cgrn/reference/verify.hpp"
#include "cgrn/rng.hpp"

namespace cgrn::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream is(path);
  for (std::string line; std::getline(is, line);) lines.push_back(line);
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  for (const auto& l : lines) os << l << '\n';
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

void truncate_lines(const fs::path& path, std::size_t keep) {
  auto lines = read_lines(path);
  if (lines.size() > keep) lines.resize(keep);
  write_lines(path, lines);
}

fs::path metrics_path(const IoConfig& io) {
  return io.out_dir / (io.metrics_format == MetricsFormat::Json ? "metrics.jsonl" : "metrics.txt");
}

void save_checkpoint(const fs::path& path, Trainer& trainer, std::uint64_t step, std::uint32_t epoch,
                     std::uint32_t epoch_step) {
  CheckpointFooter footer;
  footer.step = step;
  footer.epoch = epoch;
  footer.epoch_step = epoch_step;
  footer.seed = trainer.config().seed;
  std::vector<const Adam*> opts;
  for (Adam* a : trainer.optimizers()) {
    opts.push_back(a);
    footer.optimizer_steps.push_back(a->steps());
  }
  footer.rng_state = rng_state(std::mt19937_64(mix_seed(trainer.config().seed, {7, epoch})));
  const fs::path tmp = path.string() + ".tmp";
  write_checkpoint(tmp, trainer.model().store(), opts, footer);
  fs::rename(tmp, path);
}

std::vector<std::size_t> grid_rows(std::size_t n, std::size_t rows) {
  std::vector<std::size_t> idx;
  rows = std::min(rows, n);
  for (std::size_t i = 0; i < rows; ++i) idx.push_back(i * n / rows);
  return idx;
}

const Dataset& split_of(const Corpus& corpus, const std::string& name) {
  const auto it = corpus.splits.find(name);
  if (it == corpus.splits.end()) throw ConfigError("corpus has no split '" + name + "'");
  return it->second;
}

bool has_split(const Corpus& corpus, const std::string& name) {
  const auto it = corpus.splits.find(name);
  return it != corpus.splits.end() && !it->second.empty();
}

// The run configuration of a checkpoint: --config if given, else the
// config.txt written beside it.
RunConfig checkpoint_config(const std::string& config_file, const fs::path& checkpoint,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::optional<fs::path> file;
  if (!config_file.empty()) {
    file = config_file;
  } else if (fs::exists(checkpoint.parent_path() / "config.txt")) {
    file = checkpoint.parent_path() / "config.txt";
  }
  return load_config(file, overrides);
}

void load_weights(Cgrn& model, const fs::path& checkpoint) {
  if (!fs::is_regular_file(checkpoint)) throw ConfigError("checkpoint " + checkpoint.string() + " not found");
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  try {
    restore_checkpoint(ckpt, model.store(), {});
  } catch (const std::exception& e) {
    throw ConfigError(std::string("checkpoint does not match the configured model: ") + e.what());
  }
}

std::vector<std::size_t> parse_font_list(const std::string& text, std::size_t m) {
  std::vector<std::size_t> fonts;
  if (text.empty()) {
    for (std::size_t f = 0; f < m; ++f) fonts.push_back(f);
    return fonts;
  }
  std::istringstream is(text);
  for (std::string tok; std::getline(is, tok, ',');) {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || v < 0 || static_cast<std::size_t>(v) >= m) {
      throw ConfigError("unknown font id '" + tok + "' (model has fonts 0.." + std::to_string(m - 1) + ")");
    }
    fonts.push_back(static_cast<std::size_t>(v));
  }
  return fonts;
}

int cmd_train(const std::string& config_file, const std::string& resume,
              const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& out) {
  RunConfig cfg = load_config(config_file.empty() ? std::nullopt : std::optional<fs::path>(config_file), overrides);
  const Corpus corpus = load_corpus(cfg);
  const auto summary =
      train(std::move(cfg), corpus, resume.empty() ? std::nullopt : std::optional<fs::path>(resume), out);
  for (const auto& r : summary.reports) {
    out << "final " << r.split << " accuracy=" << fixed(r.accuracy) << " (" << r.correct << "/" << r.total << ")\n";
  }
  out << "run directory " << summary.out_dir.string() << "\n";
  return kOk;
}

int cmd_eval(const std::string& config_file, const std::string& checkpoint, const std::string& split,
             std::string report_path, std::string predictions_path,
             const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& out) {
  RunConfig cfg = checkpoint_config(config_file, checkpoint, overrides);
  const Corpus corpus = load_corpus(cfg);
  cfg.resolve(corpus.class_names.size(), corpus.font_names.size());
  Cgrn model(cfg.network(), cfg.train().seed);
  load_weights(model, checkpoint);

  std::vector<std::string> names;
  if (split == "all") {
    for (const char* s : {"test_iid", "test_novel_font"}) {
      if (has_split(corpus, s)) names.push_back(s);
    }
    if (names.empty()) throw ConfigError("corpus has no non-empty test split");
  } else {
    split_of(corpus, split);
    names.push_back(split);
  }
  EvalOptions opts;
  opts.pixel = cfg.train().ablation.generator();
  std::vector<EvalReport> reports;
  for (const auto& name : names) {
    reports.push_back(evaluate(model, split_of(corpus, name), name, opts));
    const auto& r = reports.back();
    out << "split=" << name << " accuracy=" << format_real(r.accuracy) << " correct=" << r.correct
        << " total=" << r.total;
    if (r.mean_l_pixel) out << " mean_l_pixel=" << format_real(*r.mean_l_pixel);
    out << "\n";
  }
  const IoConfig io = cfg.io();
  if (report_path.empty()) report_path = (io.out_dir / "eval_report.csv").string();
  if (predictions_path.empty()) predictions_path = (io.out_dir / "eval_predictions.csv").string();
  for (const auto& p : {fs::path(report_path), fs::path(predictions_path)}) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }
  write_report_csv(report_path, reports);
  write_predictions_csv(predictions_path, reports);
  out << "report " << report_path << "\npredictions " << predictions_path << "\n";
  return kOk;
}

int cmd_generate(const std::string& config_file, const std::string& checkpoint, const std::string& input,
                 long long sample, const std::string& split, const std::string& fonts_text, std::string output,
                 const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& out) {
  if (input.empty() == (sample < 0)) throw ConfigError("generate needs exactly one of --input or --sample");
  RunConfig cfg = checkpoint_config(config_file, checkpoint, overrides);
  Image x;
  if (!input.empty()) {
    const NetworkConfig probe = [&] {
      RunConfig c = cfg;
      if (!c.resolved()) throw ConfigError("generate --input needs a resolved run configuration (its config.txt)");
      return c.network();
    }();
    x = read_ppm(input);
    if (x.width != probe.image_size || x.height != probe.image_size) {
      x = resize_bilinear(x, probe.image_size, probe.image_size);
    }
  } else {
    const Corpus corpus = load_corpus(cfg);
    cfg.resolve(corpus.class_names.size(), corpus.font_names.size());
    const Dataset& data = split_of(corpus, split);
    if (static_cast<std::size_t>(sample) >= data.size()) {
      throw ConfigError("sample " + std::to_string(sample) + " out of range for split '" + split + "' of size " +
                        std::to_string(data.size()));
    }
    x = data.samples[static_cast<std::size_t>(sample)].x;
  }
  const NetworkConfig net = cfg.network();
  if (!cfg.train().ablation.generator()) throw ConfigError("the run was trained without the glyph generator");
  const std::vector<std::size_t> fonts = parse_font_list(fonts_text, net.num_fonts);
  Cgrn model(net, cfg.train().seed);
  load_weights(model, checkpoint);
  std::vector<Image> row{x};
  for (Image& g : generate_glyphs(model, x, fonts)) row.push_back(std::move(g));
  const Image grid = compose_grid({row});
  if (output.empty()) output = (cfg.io().out_dir / "generate.ppm").string();
  if (fs::path(output).has_parent_path()) fs::create_directories(fs::path(output).parent_path());
  write_ppm(output, grid);
  out << "wrote " << output << " (" << grid.width << "x" << grid.height << ")\n";
  return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& report_path, std::ostream& out) {
  reference::Suite s;
  try {
    s = reference::parse_suite(suite);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const reference::VerifyReport report = reference::verify(s, seed);
  reference::write_report(out, report);
  if (!report_path.empty()) {
    std::ofstream os(report_path, std::ios::binary);
    reference::write_report(os, report);
    if (!os) throw std::runtime_error("cannot write " + report_path);
  }
  return report.passed() ? kOk : kVerifyFailure;
}

int cmd_synth(const std::string& config_file, const std::string& out_dir,
              const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& out) {
  RunConfig cfg = load_config(config_file.empty() ? std::nullopt : std::optional<fs::path>(config_file), overrides);
  if (!cfg.data_dir().empty()) throw ConfigError("synth-data generates a corpus; data.dir must be empty");
  const Corpus corpus = to_corpus(make_splits(cfg.data()));
  export_corpus(out_dir, corpus);
  out << "wrote " << out_dir << ":";
  for (const auto& [name, d] : corpus.splits) out << " " << name << "=" << d.size();
  out << " classes=" << corpus.class_names.size() << " fonts=" << corpus.font_names.size() << "\n";
  return kOk;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() == 2) throw ConfigError("unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
    } else if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(key, args[++i]);
    } else {
      out.emplace_back(key, "true");
    }
  }
  return out;
}

RunConfig load_config(const std::optional<fs::path>& file,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  cfg.apply_environment();
  if (file) cfg.load_file(*file);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return cfg;
}

Corpus load_corpus(const RunConfig& config) {
  const fs::path dir = config.data_dir();
  if (!dir.empty()) {
    try {
      return load_directory(dir, config.data().image_size);
    } catch (const ImageFormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("data.dir: ") + e.what());
    }
  }
  return to_corpus(make_splits(config.data()));
}

TrainSummary train(RunConfig cfg, const Corpus& corpus, const std::optional<fs::path>& resume, std::ostream& log) {
  cfg.resolve(corpus.class_names.size(), corpus.font_names.size());
  const NetworkConfig net = cfg.network();
  const TrainConfig tc = cfg.train();
  const IoConfig io = cfg.io();
  const double stop_at = cfg.stop_at_accuracy();
  const Dataset& train_set = split_of(corpus, "train");
  const bool have_iid = has_split(corpus, "test_iid");

  TrainSummary summary;
  summary.out_dir = io.out_dir;
  fs::create_directories(io.out_dir / "grids");
  {
    std::ofstream os(io.out_dir / "config.txt", std::ios::binary | std::ios::trunc);
    os << cfg.to_text();
    if (!os) throw std::runtime_error("cannot write " + (io.out_dir / "config.txt").string());
  }

  Cgrn model(net, tc.seed);
  Trainer trainer(model, tc);
  LoopStart start;
  const fs::path mpath = metrics_path(io), epochs_path = io.out_dir / "epochs.csv";
  if (resume) {
    const Checkpoint ckpt = read_checkpoint(*resume);
    if (ckpt.footer.seed != tc.seed) {
      throw ConfigError("checkpoint was written with train.seed=" + std::to_string(ckpt.footer.seed));
    }
    restore_checkpoint(ckpt, model.store(), trainer.optimizers());
    trainer.set_steps(ckpt.footer.step);
    start = {ckpt.footer.epoch, ckpt.footer.epoch_step};
    truncate_lines(mpath, ckpt.footer.step);
    truncate_lines(epochs_path, 1 + ckpt.footer.epoch);
    log << "resumed at step " << ckpt.footer.step << " (epoch " << ckpt.footer.epoch << ", step "
        << ckpt.footer.epoch_step << ")\n";
  } else {
    write_lines(mpath, {});
    write_lines(epochs_path, {"epoch,steps,test_iid_accuracy"});
  }

  std::ofstream metrics_file(mpath, std::ios::binary | std::ios::app);
  std::ofstream epochs_file(epochs_path, std::ios::binary | std::ios::app);
  MetricsWriter writer(metrics_file, io.metrics_format, io.wallclock);
  const auto t0 = std::chrono::steady_clock::now();
  Real composite_sum = 0;
  std::size_t composite_n = 0;

  LoopHooks hooks;
  hooks.checkpoint_every = io.checkpoint_every;
  hooks.on_step = [&](const StepRecord& rec) {
    writer.write(rec);
    metrics_file.flush();
    composite_sum += rec.report.composite;
    ++composite_n;
  };
  hooks.on_checkpoint = [&](std::uint64_t step, std::uint32_t epoch, std::uint32_t epoch_step) {
    if (io.checkpoint_every > 0 && step % io.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%08llu.cgrn", static_cast<unsigned long long>(step));
      save_checkpoint(io.out_dir / name, trainer, step, epoch, epoch_step);
    }
    save_checkpoint(io.out_dir / "checkpoint.cgrn", trainer, step, epoch, epoch_step);
  };
  hooks.on_epoch_end = [&](std::uint32_t epochs_done) {
    const Dataset& shown = have_iid ? split_of(corpus, "test_iid") : train_set;
    if (tc.ablation.generator() && io.grid_samples > 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03u.ppm", epochs_done);
      write_ppm(io.out_dir / "grids" / name, sample_grid(model, shown, grid_rows(shown.size(), io.grid_samples)));
    }
    double acc = -1;
    if (have_iid) {
      EvalOptions opts;
      opts.pixel = false;
      acc = evaluate(model, split_of(corpus, "test_iid"), "test_iid", opts).accuracy;
      summary.epoch_accuracy.push_back(acc);
    }
    epochs_file << epochs_done << ',' << trainer.steps() << ',' << (have_iid ? format_real(acc) : "") << '\n';
    epochs_file.flush();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "epoch " << epochs_done << "/" << tc.epochs << " steps=" << trainer.steps()
        << " mean_composite=" << fixed(composite_n ? composite_sum / static_cast<Real>(composite_n) : 0)
        << (have_iid ? " test_iid=" + fixed(acc) : std::string()) << " elapsed=" << fixed(secs, 1) << "s\n";
    log.flush();
    composite_sum = 0;
    composite_n = 0;
    return !(stop_at > 0 && acc >= stop_at);
  };

  summary.loop = train_loop(trainer, train_set, hooks, start);

  EvalOptions opts;
  opts.pixel = tc.ablation.generator();
  for (const char* s : {"test_iid", "test_novel_font"}) {
    if (has_split(corpus, s)) summary.reports.push_back(evaluate(model, split_of(corpus, s), s, opts));
  }
  if (!summary.reports.empty()) {
    write_report_csv(io.out_dir / "report.csv", summary.reports);
    write_predictions_csv(io.out_dir / "predictions.csv", summary.reports);
  }
  return summary;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scene character recognition with canonical glyph generation"};
  app.name("cgrn");
  app.require_subcommand(1);

  std::string config_file, resume, checkpoint, split = "all", gen_split = "test_iid", report, predictions, input,
                                                 fonts, output, suite = "all", synth_out;
  long long sample = -1;
  std::uint64_t verify_seed = 1;

  auto* train_cmd = app.add_subcommand("train", "train a model into io.out_dir")->allow_extras();
  train_cmd->add_option("--config", config_file, "key=value configuration file");
  train_cmd->add_option("--resume", resume, "continue from a checkpoint of the same run");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint")->allow_extras();
  eval_cmd->add_option("--config", config_file, "run configuration (default: config.txt beside the checkpoint)");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--split", split, "test_iid, test_novel_font, train or all");
  eval_cmd->add_option("--report", report, "report CSV path");
  eval_cmd->add_option("--predictions", predictions, "per-sample predictions CSV path");

  auto* gen_cmd = app.add_subcommand("generate", "write an input/glyph grid")->allow_extras();
  gen_cmd->add_option("--config", config_file, "run configuration (default: config.txt beside the checkpoint)");
  gen_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  gen_cmd->add_option("--input", input, "PPM image to render");
  gen_cmd->add_option("--sample", sample, "sample index in --split instead of --input");
  gen_cmd->add_option("--split", gen_split, "split for --sample");
  gen_cmd->add_option("--fonts", fonts, "comma-separated font ids (default: all)");
  gen_cmd->add_option("--output", output, "output PPM path");

  auto* verify_cmd = app.add_subcommand("verify", "run the verification suites");
  verify_cmd->add_option("--suite", suite, "gradcheck, oracle, invariants or all");
  verify_cmd->add_option("--seed", verify_seed, "seed for random test inputs");
  verify_cmd->add_option("--report", report, "also write the CSV report here");

  auto* synth_cmd = app.add_subcommand("synth-data", "export the synthetic corpus as PPM files")->allow_extras();
  synth_cmd->add_option("--config", config_file, "key=value configuration file");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "cgrn: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_file, resume, parse_overrides(train_cmd->remaining()), out);
    if (eval_cmd->parsed()) {
      return cmd_eval(config_file, checkpoint, split, report, predictions, parse_overrides(eval_cmd->remaining()),
                      out);
    }
    if (gen_cmd->parsed()) {
      return cmd_generate(config_file, checkpoint, input, sample, gen_split, fonts, output,
                          parse_overrides(gen_cmd->remaining()), out);
    }
    if (verify_cmd->parsed()) return cmd_verify(suite, verify_seed, report, out);
    if (synth_cmd->parsed()) return cmd_synth(config_file, synth_out, parse_overrides(synth_cmd->remaining()), out);
  } catch (const ConfigError& e) {
    err << "cgrn: configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    err << "cgrn: numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "cgrn: error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace cgrn::cli
