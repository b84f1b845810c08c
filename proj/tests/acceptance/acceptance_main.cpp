#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cgrn/cli/app.hpp"
#include "cgrn/dataset.hpp"
#include "cgrn/losses.hpp"
#include "cgrn/model.hpp"
#include "cgrn/reference/verify.hpp"
#include "cgrn/trainer.hpp"

#ifndef CGRN_FAST_TOOL
#define CGRN_FAST_TOOL ""
#endif

using namespace cgrn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool gated = true;
};

struct Options {
  std::set<int> criteria;
  fs::path work = "acceptance_runs";
  std::string tool = CGRN_FAST_TOOL;
  int seeds = 5;
  int ablation_epochs = 3;
  int gdn_seeds = 1;
  std::uint64_t verify_seed = 1;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), {});
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

// Runs `cgrn train` with the given overrides, as a subprocess of the speed
// build when one is configured, else in process. Returns wall seconds.
double train_run(const Options& opt, const fs::path& dir, std::vector<std::string> args) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  args.insert(args.end(), {"--io.out_dir", dir.string()});
  const auto t0 = Clock::now();
  int code;
  if (!opt.tool.empty()) {
    std::string cmd = quote(opt.tool) + " train";
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " > " + quote((dir / "train.log").string()) + " 2>&1";
    code = std::system(cmd.c_str());
  } else {
    args.insert(args.begin(), "train");
    std::ofstream log(dir / "train.log");
    code = cli::run(args, log, log);
  }
  if (code != 0) throw std::runtime_error("training into " + dir.string() + " failed; see train.log");
  return seconds_since(t0);
}

struct RunReport {
  std::map<std::string, double> accuracy;
  std::map<std::string, double> l_pixel;
};

RunReport read_report(const fs::path& dir) {
  RunReport r;
  std::ifstream is(dir / "report.csv");
  for (std::string line; std::getline(is, line);) {
    std::vector<std::string> c;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    if (c.size() < 5) continue;
    if (c[0] == "accuracy") r.accuracy[c[1]] = std::stod(c[4]);
    if (c[0] == "mean_l_pixel") r.l_pixel[c[1]] = std::stod(c[4]);
  }
  return r;
}

std::vector<double> epoch_accuracies(const fs::path& dir) {
  std::vector<double> acc;
  std::ifstream is(dir / "epochs.csv");
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) acc.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  return acc;
}

const std::vector<reference::CheckResult>& invariants(const Options& opt) {
  static const auto checks = reference::run_invariants(opt.verify_seed, {1});
  return checks;
}

Outcome summarize(const std::vector<reference::CheckResult>& checks, const std::string& what) {
  Outcome o{true, ""};
  std::size_t n = 0;
  for (const auto& c : checks) {
    ++n;
    if (!c.passed) {
      o.pass = false;
      o.detail += " failed: " + c.name + " (" + c.detail + ");";
    }
  }
  if (n == 0) return {false, "no " + what + " checks ran"};
  if (o.pass) o.detail = std::to_string(n) + " " + what + " checks pass";
  return o;
}

Outcome criterion1(const Options& opt) {
  if (sizeof(Real) != 8) return {false, "gradient checks need the 64-bit build"};
  const auto t0 = Clock::now();
  const auto checks = reference::run_gradcheck(opt.verify_seed);
  const double secs = seconds_since(t0);
  std::map<std::string, int> shapes;
  double worst = 0;
  Outcome o = summarize(checks, "gradient");
  for (const auto& c : checks) {
    if (c.name.rfind("self_test", 0) == 0) continue;
    ++shapes[c.name.substr(0, c.name.find(' '))];
    worst = std::max(worst, c.value);
    if (c.value > 1e-4) {
      o.pass = false;
      o.detail += " " + c.name + " rel err " + sci(c.value) + ";";
    }
  }
  for (const auto& [op, n] : shapes) {
    if (n < 3) {
      o.pass = false;
      o.detail += " " + op + " has only " + std::to_string(n) + " shapes;";
    }
  }
  if (secs > 120) {
    o.pass = false;
    o.detail += " runtime " + num(secs, 1) + "s exceeds 120s;";
  }
  o.detail += "; " + std::to_string(shapes.size()) + " ops, max rel err " + sci(worst) + ", " + num(secs, 1) + "s";
  return o;
}

Outcome criterion2(const Options& opt) {
  std::vector<reference::CheckResult> picked;
  double worst = 0;
  for (const auto& c : reference::run_oracle(opt.verify_seed)) {
    for (const char* op : {"conv2d ", "deconv2d ", "maxpool2d ", "avgpool2d ", "conv_deconv_adjoint "}) {
      if (c.name.rfind(op, 0) == 0) {
        picked.push_back(c);
        picked.back().passed = c.passed && c.value <= 1e-9;
        worst = std::max(worst, c.value);
      }
    }
  }
  Outcome o = summarize(picked, "oracle");
  o.detail += "; max abs diff " + sci(worst);
  return o;
}

Outcome criterion3(const Options& opt) {
  std::vector<reference::CheckResult> picked;
  for (const auto& c : invariants(opt)) {
    if (c.name.rfind("shape_table paper", 0) == 0 || c.name.rfind("paper ", 0) == 0) picked.push_back(c);
  }
  Outcome o = summarize(picked, "paper shape");
  const NetworkConfig paper = NetworkConfig::paper(62, 4);
  Cgrn model(paper, 1);
  const Shape c_fc = model.store().get("θc/C_fc.weight").shape();
  const Shape d_fc = model.store().get("θd/D_fc.weight").shape();
  if (c_fc != Shape{1472, 62} || d_fc != Shape{32768, 1}) {
    o.pass = false;
    o.detail += " FC weights are " + c_fc.str() + " and " + d_fc.str();
  } else {
    o.detail += "; C_fc " + c_fc.str() + ", D_fc " + d_fc.str();
  }
  return o;
}

Outcome criterion4() {
  Outcome o{true, ""};
  auto check = [&](const std::string& name, double err, double tol) {
    if (err > tol) o.pass = false;
    o.detail += name + " err " + sci(err) + (err > tol ? " FAIL" : "") + "; ";
  };
  const Tensor z = Tensor::zeros(Shape{16, 1});
  check("L_D(0,0)=2ln2", std::abs(loss_d(z, z).item() - 2 * std::numbers::ln2), 1e-9);
  for (std::size_t l : {10, 36, 62}) {
    std::vector<int> labels;
    for (std::size_t i = 0; i < 8; ++i) labels.push_back(static_cast<int>(i * 7 % l));
    check("L_CR=ln" + std::to_string(l),
          std::abs(loss_cr(Tensor::zeros(Shape{8, l}), labels).item() - std::log(static_cast<double>(l))), 1e-9);
  }

  DataConfig dc;
  dc.classes = 8;
  dc.train_fonts = {4};
  dc.corruptions_per = 2;
  dc.test_per = 0;
  dc.novel_per = 0;
  const Splits s = make_splits(dc);
  const Batch batch = make_batch(std::span<const Sample>(s.train.samples.data(), 16), 4);
  check("L_pixel(t,t)", std::abs(loss_pixel_stacked(batch.targets, batch.targets).item()), 0);

  Cgrn model(NetworkConfig::desk(8, 4), 1);
  TrainConfig tc;
  tc.lambda = 100;
  Trainer trainer(model, tc);
  double worst = 0;
  for (int i = 0; i < 3; ++i) {
    const LossReport r = trainer.step(batch);
    const double expect = 100.0 * r.l_cr + 100.0 * *r.l_pixel - *r.l_d;
    worst = std::max(worst, std::abs(static_cast<double>(r.composite) - expect));
  }
  check("composite identity", worst, 1e-12);
  o.detail.resize(o.detail.size() - 2);
  return o;
}

Outcome criterion5(const Options& opt) {
  std::vector<reference::CheckResult> picked;
  for (const auto& c : invariants(opt)) {
    if (c.name.rfind("theta_", 0) == 0 || c.name.rfind("discriminator_", 0) == 0 ||
        c.name.rfind("joint_gradients", 0) == 0) {
      picked.push_back(c);
    }
  }
  return summarize(picked, "bit-exact routing");
}

Outcome criterion6(const Options& opt) {
  Outcome o{true, ""};
  const fs::path dir = opt.work / "c6_full";
  const double secs = train_run(opt, dir, {"--train.seed", "1", "--train.epochs", "20", "--train.stop_at_accuracy",
                                           "0.9", "--io.grid_samples", "4"});
  const auto acc = epoch_accuracies(dir);
  const double best = acc.empty() ? 0 : *std::max_element(acc.begin(), acc.end());
  if (best < 0.9 || secs > 1800) o.pass = false;
  o.detail = "test_iid " + num(best) + " after " + std::to_string(acc.size()) + " epochs in " + num(secs / 60, 1) +
             " min (need >= 0.9 within 20 epochs and 30 min)";

  const Splits splits = make_splits(DataConfig{});
  Cgrn fresh(NetworkConfig::desk(36, 4), 1);
  EvalOptions eo;
  eo.pixel = false;
  const double chance = evaluate(fresh, splits.test_iid, "test_iid", eo).accuracy;
  if (std::abs(chance - 1.0 / 36) > 0.03) o.pass = false;
  o.detail += "; fresh model " + num(chance) + " (chance 0.0278 +- 0.03)";
  return o;
}

struct AblationRow {
  int seed;
  RunReport mf, sf, plain;
};

std::vector<AblationRow> ablation_rows;

Outcome criterion7(const Options& opt) {
  const std::string epochs = std::to_string(opt.ablation_epochs);
  const std::vector<std::string> base{"--train.epochs", epochs, "--io.grid_samples", "4"};
  std::ofstream table(opt.work / "c7_ablation.csv");
  table << "seed,mf_test_iid,mf_test_novel_font,sf_test_iid,sf_test_novel_font,plain_test_iid,plain_test_novel_font\n";
  std::cout << "  seed |  MF iid  novel |  SF iid  novel | -GGN-GDN iid  novel\n";
  std::vector<double> mf_novel, sf_novel, mf_iid, plain_iid;
  for (int seed = 1; seed <= opt.seeds; ++seed) {
    auto args = [&](std::vector<std::string> extra) {
      std::vector<std::string> a = base;
      a.insert(a.end(), {"--train.seed", std::to_string(seed)});
      a.insert(a.end(), extra.begin(), extra.end());
      return a;
    };
    const fs::path root = opt.work / ("c7_seed" + std::to_string(seed));
    AblationRow row{seed, {}, {}, {}};
    train_run(opt, root / "mf", args({}));
    row.mf = read_report(root / "mf");
    train_run(opt, root / "sf", args({"--ablation.single_font"}));
    row.sf = read_report(root / "sf");
    train_run(opt, root / "plain", args({"--ablation.no_ggn", "--ablation.no_gdn"}));
    row.plain = read_report(root / "plain");
    ablation_rows.push_back(row);

    mf_iid.push_back(row.mf.accuracy["test_iid"]);
    mf_novel.push_back(row.mf.accuracy["test_novel_font"]);
    sf_novel.push_back(row.sf.accuracy["test_novel_font"]);
    plain_iid.push_back(row.plain.accuracy["test_iid"]);
    table << seed << ',' << row.mf.accuracy["test_iid"] << ',' << row.mf.accuracy["test_novel_font"] << ','
          << row.sf.accuracy["test_iid"] << ',' << row.sf.accuracy["test_novel_font"] << ','
          << row.plain.accuracy["test_iid"] << ',' << row.plain.accuracy["test_novel_font"] << '\n';
    table.flush();
    std::printf("  %4d | %s %s | %s %s |       %s %s\n", seed, num(row.mf.accuracy["test_iid"]).c_str(),
                num(row.mf.accuracy["test_novel_font"]).c_str(), num(row.sf.accuracy["test_iid"]).c_str(),
                num(row.sf.accuracy["test_novel_font"]).c_str(), num(row.plain.accuracy["test_iid"]).c_str(),
                num(row.plain.accuracy["test_novel_font"]).c_str());
    std::fflush(stdout);
  }
  const double mf_n = median(mf_novel), sf_n = median(sf_novel), mf_i = median(mf_iid), pl_i = median(plain_iid);
  Outcome o{mf_n >= sf_n && mf_i >= pl_i, ""};
  o.detail = std::to_string(opt.seeds) + " seeds x " + epochs + " epochs; median test_novel_font MF " + num(mf_n) +
             (mf_n >= sf_n ? " >= " : " < ") + "SF " + num(sf_n) + "; median test_iid full " + num(mf_i) +
             (mf_i >= pl_i ? " >= " : " < ") + "-GGN-GDN " + num(pl_i) + "; table " +
             (opt.work / "c7_ablation.csv").string();
  return o;
}

Outcome criterion8(const Options& opt) {
  std::vector<double> with_gdn, without_gdn;
  std::vector<fs::path> pairs;
  for (int seed = 1; seed <= opt.gdn_seeds; ++seed) {
    const fs::path root = opt.work / ("c7_seed" + std::to_string(seed));
    const std::vector<std::string> base{"--train.epochs", std::to_string(opt.ablation_epochs), "--train.seed",
                                        std::to_string(seed), "--io.grid_samples", "4"};
    std::optional<RunReport> mf;
    for (const auto& row : ablation_rows) {
      if (row.seed == seed) mf = row.mf;
    }
    if (!mf) {
      train_run(opt, root / "mf", base);
      mf = read_report(root / "mf");
    }
    auto no_gdn = base;
    no_gdn.push_back("--ablation.no_gdn");
    train_run(opt, root / "no_gdn", no_gdn);
    with_gdn.push_back(mf->l_pixel["test_iid"]);
    without_gdn.push_back(read_report(root / "no_gdn").l_pixel["test_iid"]);
    pairs.push_back(root);
  }
  const double a = median(with_gdn), b = median(without_gdn);
  Outcome o{true, "", false};
  o.detail = "median test_iid L_pixel with GDN " + num(a, 5) + (a <= b ? " <= " : " > ") + "without " + num(b, 5) +
             " over " + std::to_string(opt.gdn_seeds) + " seed(s)";
  if (a > b) {
    o.pass = false;
    o.detail += "; exception flagged, compare the sample grids:";
    for (const auto& p : pairs) {
      o.detail += " " + (p / "mf" / "grids").string() + " vs " + (p / "no_gdn" / "grids").string();
    }
  }
  return o;
}

Outcome criterion9(const Options& opt) {
  const std::vector<std::string> args{"--data.classes",     "8",  "--data.train_fonts",      "4,5",
                                      "--data.corruptions_per", "4", "--data.test_per",    "1",
                                      "--data.novel_per",   "1",  "--train.epochs",          "2",
                                      "--train.seed",       "7",  "--io.checkpoint_every",   "3"};
  Options in_process = opt;
  in_process.tool.clear();
  train_run(in_process, opt.work / "c9_a", args);
  train_run(in_process, opt.work / "c9_b", args);
  Outcome o{true, ""};
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(opt.work / "c9_a")) {
    const std::string name = e.path().filename().string();
    if (name != "metrics.txt" && e.path().extension() != ".cgrn") continue;
    ++compared;
    const std::string a = slurp(e.path()), b = slurp(opt.work / "c9_b" / name);
    if (a.empty() || a != b) {
      o.pass = false;
      o.detail += name + " differs; ";
    }
  }
  if (compared < 3) o.pass = false;
  o.detail += std::to_string(compared) + " files (metrics.txt and checkpoints) byte-identical across two runs";
  if (!o.pass) o.detail = "mismatch: " + o.detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::string criteria = "1,2,3,4,5,6,7,8,9";
  CLI::App app{"Acceptance criteria 1-9; one PASS/FAIL line per criterion"};
  app.add_option("--criteria", criteria, "comma-separated subset to run");
  app.add_option("--work", opt.work, "directory for training runs");
  app.add_option("--tool", opt.tool, "cgrn executable for training runs (empty: in process)");
  app.add_option("--seeds", opt.seeds, "seeds per ablation variant");
  app.add_option("--ablation-epochs", opt.ablation_epochs, "epochs per ablation run");
  app.add_option("--gdn-seeds", opt.gdn_seeds, "seeds for the -GDN pixel comparison");
  app.add_option("--verify-seed", opt.verify_seed, "seed of the verification inputs");
  CLI11_PARSE(app, argc, argv);
  {
    std::stringstream ss(criteria);
    for (std::string tok; std::getline(ss, tok, ',');) opt.criteria.insert(std::stoi(tok));
  }
  fs::create_directories(opt.work);
  std::cout << "training runs: " << (opt.tool.empty() ? "in process (" : opt.tool + " (")
            << (opt.tool.empty() ? std::to_string(8 * sizeof(Real)) + "-bit" : "speed build") << ") under "
            << fs::absolute(opt.work).string() << "\n";

  const std::vector<std::pair<int, std::function<Outcome()>>> all{
      {1, [&] { return criterion1(opt); }}, {2, [&] { return criterion2(opt); }},
      {3, [&] { return criterion3(opt); }}, {4, [] { return criterion4(); }},
      {5, [&] { return criterion5(opt); }}, {6, [&] { return criterion6(opt); }},
      {7, [&] { return criterion7(opt); }}, {8, [&] { return criterion8(opt); }},
      {9, [&] { return criterion9(opt); }},
  };
  bool ok = true;
  for (const auto& [id, fn] : all) {
    if (!opt.criteria.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const char* verdict = o.pass ? "PASS" : (o.gated ? "FAIL" : "REPORT");
    if (!o.pass && o.gated) ok = false;
    std::cout << "criterion " << id << " " << verdict << ": " << o.detail << " [" << num(seconds_since(t0), 1)
              << "s]" << std::endl;
  }
  return ok ? 0 : 1;
}
