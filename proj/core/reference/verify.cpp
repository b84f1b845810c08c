#include "cgrn/reference/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cgrn/graph.hpp"
#include "cgrn/losses.hpp"
#include "cgrn/model.hpp"
#include "cgrn/ops.hpp"
#include "cgrn/reference/gradcheck.hpp"
#include "cgrn/reference/naive_ops.hpp"
#include "cgrn/trainer.hpp"

namespace cgrn::reference {

namespace {

constexpr double kOracleTolerance = 1e-9;

Tensor random_tensor(std::mt19937_64& rng, Shape s, double lo = -1, double hi = 1) {
  Tensor t(std::move(s));
  for (Real& v : t.data()) v = static_cast<Real>(lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return t;
}

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  return m;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.ptr(), b.ptr(), a.numel() * sizeof(Real)) == 0;
}

CheckResult tolerance_check(std::string suite, std::string name, double err, double tol, std::string detail = {}) {
  return {std::move(suite), std::move(name), err <= tol, err, std::move(detail)};
}

std::string shape_str(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return Shape{n, c, h, w}.str();
}

std::vector<CheckResult> shape_tables(NetworkConfig config, std::size_t batch, std::uint64_t seed) {
  std::vector<CheckResult> out;
  const std::string tag = to_string(config.preset) + " B=" + std::to_string(batch);
  Cgrn model(config, seed);
  ShapeTrace trace;
  model.set_trace(&trace);
  {
    Graph::Pause pause;
    std::mt19937_64 rng(seed);
    const Tensor x = random_tensor(rng, {batch, 3, config.image_size, config.image_size}, 0, 1);
    const FeaturePyramid pyr = model.extract(x, ops::Mode::Train);
    model.classify(pyr);
    std::vector<std::size_t> fonts;
    for (std::size_t j = 0; j < config.num_fonts; ++j) fonts.insert(fonts.end(), batch, j);
    const Tensor gen = model.generate_slots(pyr, fonts, config.num_fonts, ops::Mode::Train);
    model.discriminate(ops::repeat_batch(x, config.num_fonts), gen, ops::Mode::Train);
  }
  const auto expected = expected_shapes(config, batch);
  std::size_t mismatches = 0;
  std::string first;
  for (std::size_t i = 0; i < std::max(expected.size(), trace.size()); ++i) {
    const bool ok = i < expected.size() && i < trace.size() && expected[i].name == trace[i].name &&
                    expected[i].shape == trace[i].shape;
    if (!ok) {
      ++mismatches;
      if (first.empty()) {
        first = i < expected.size() ? expected[i].name + " expected " + expected[i].shape.str() : "extra layer";
        if (i < trace.size()) first += " got " + trace[i].name + " " + trace[i].shape.str();
      }
    }
  }
  out.push_back({"invariants", "shape_table " + tag, mismatches == 0, static_cast<double>(mismatches),
                 mismatches == 0 ? std::to_string(trace.size()) + " layers" : first});
  return out;
}

std::vector<CheckResult> partition_checks(const Cgrn& model, const std::string& tag) {
  std::map<std::string, int> seen;
  std::size_t total = 0;
  for (Slice s : {Slice::Encoder, Slice::Classifier, Slice::Generator, Slice::Discriminator}) {
    for (const auto& p : model.store().slice(s)) {
      ++seen[p.name];
      ++total;
    }
  }
  bool ok = total == model.store().parameters().size();
  for (const auto& [name, count] : seen) ok = ok && count == 1;
  bool emb = model.store().slice(Slice::Generator).size() > 0;
  bool emb_in_g = false;
  for (const auto& p : model.store().slice(Slice::Generator)) emb_in_g = emb_in_g || p.tensor.same_storage(model.font_embeddings());
  return {{"invariants", "parameter_partition " + tag, ok && emb && emb_in_g, static_cast<double>(total),
           "font embedding table in generator slice"}};
}

Batch random_batch(std::mt19937_64& rng, const NetworkConfig& config, std::size_t batch) {
  Batch b;
  const std::size_t s = config.image_size, m = config.num_fonts;
  b.x = random_tensor(rng, {batch, 3, s, s}, 0, 1);
  b.targets = random_tensor(rng, {m * batch, 3, s, s}, 0, 1);
  for (std::size_t i = 0; i < batch; ++i) b.labels.push_back(static_cast<int>(rng() % config.num_classes));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < batch; ++i) b.fonts.push_back((j + i) % m);
  }
  b.slots = m;
  return b;
}

using GradMap = std::map<std::string, std::vector<Real>>;

GradMap gradients(const Cgrn& model, Slice slice) {
  GradMap out;
  for (const auto& p : model.store().slice(slice)) {
    std::vector<Real> g(p.tensor.numel(), Real{0});
    if (p.tensor.has_grad()) std::copy(p.tensor.grad().begin(), p.tensor.grad().end(), g.begin());
    out[p.name] = std::move(g);
  }
  return out;
}

std::size_t nonzero_params(const GradMap& g) {
  std::size_t n = 0;
  for (const auto& [name, v] : g) {
    bool any = false;
    for (Real x : v) any = any || x != 0;
    n += any;
  }
  return n;
}

std::vector<CheckResult> routing_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const NetworkConfig config = NetworkConfig::desk(10, 3);
  Cgrn model(config, seed);
  TrainConfig tc;
  tc.batch = 4;
  Trainer trainer(model, tc);
  std::mt19937_64 rng(seed + 1);
  const Batch batch = random_batch(rng, config, 4);

  const ParameterStore before = model.store().clone();
  trainer.joint_gradients(batch);
  const GradMap all_c = gradients(model, Slice::Classifier);
  const GradMap all_g = gradients(model, Slice::Generator);
  const GradMap all_e = gradients(model, Slice::Encoder);
  const GradMap all_d = gradients(model, Slice::Discriminator);

  const std::size_t n_e = model.store().slice(Slice::Encoder).size();
  const std::size_t n_c = model.store().slice(Slice::Classifier).size();
  const std::size_t n_g = model.store().slice(Slice::Generator).size();
  const std::size_t live = nonzero_params(all_e) + nonzero_params(all_c) + nonzero_params(all_g);
  out.push_back({"invariants", "joint_gradients_reach_every_joint_parameter", live == n_e + n_c + n_g,
                 static_cast<double>(live), std::to_string(n_e + n_c + n_g) + " joint tensors"});
  out.push_back({"invariants", "discriminator_gets_no_joint_gradient", nonzero_params(all_d) == 0,
                 static_cast<double>(nonzero_params(all_d)), ""});

  trainer.apply_joint();
  bool d_same = true;
  for (const auto& p : model.store().slice(Slice::Discriminator)) d_same = d_same && bit_equal(p.tensor, before.get(p.name));
  out.push_back({"invariants", "theta_d_unchanged_by_joint_update", d_same, 0, "bitwise"});
  model.store().copy_values_from(before);

  trainer.joint_gradients(batch, JointTerms{true, false, false});
  out.push_back({"invariants", "theta_c_invariant_to_pixel_and_adversarial", gradients(model, Slice::Classifier) == all_c, 0,
                 "bitwise"});
  const GradMap cr_only_g = gradients(model, Slice::Generator);
  out.push_back({"invariants", "theta_g_silent_under_cr_only", nonzero_params(cr_only_g) == 0,
                 static_cast<double>(nonzero_params(cr_only_g)), ""});
  model.store().copy_values_from(before);

  trainer.joint_gradients(batch, JointTerms{false, true, true});
  out.push_back({"invariants", "theta_g_invariant_to_cr", gradients(model, Slice::Generator) == all_g, 0, "bitwise"});
  const GradMap no_cr_c = gradients(model, Slice::Classifier);
  out.push_back({"invariants", "theta_c_silent_without_cr", nonzero_params(no_cr_c) == 0,
                 static_cast<double>(nonzero_params(no_cr_c)), ""});
  model.store().copy_values_from(before);

  trainer.discriminator_step(batch);
  bool joint_same = true;
  for (Slice s : {Slice::Encoder, Slice::Classifier, Slice::Generator}) {
    for (const auto& p : model.store().slice(s)) joint_same = joint_same && bit_equal(p.tensor, before.get(p.name));
  }
  out.push_back({"invariants", "discriminator_step_touches_only_theta_d", joint_same, 0, "bitwise"});
  model.store().zero_grad();
  return out;
}

std::vector<CheckResult> generation_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (std::size_t m : {1, 4}) {
    const NetworkConfig config = NetworkConfig::desk(10, m);
    Cgrn model(config, seed);
    std::mt19937_64 rng(seed + m);
    const Tensor x = random_tensor(rng, {3, 3, 64, 64}, 0, 1);
    Graph::Pause pause;
    for (const ops::Mode mode : {ops::Mode::Train, ops::Mode::Eval}) {
      const FeaturePyramid pyr = model.extract(x, ops::Mode::Eval);
      const auto all = model.generate_all(pyr, mode);
      bool ok = all.size() == m;
      for (std::size_t f = 0; ok && f < m; ++f) ok = bit_equal(all[f], model.generate(pyr, f, mode));
      out.push_back({"invariants",
                     std::string("generate_all_equals_generate m=") + std::to_string(m) +
                         (mode == ops::Mode::Train ? " train" : " eval"),
                     ok, 0, "bitwise"});
    }
  }
  return out;
}

std::vector<CheckResult> loss_identity_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Graph::Pause pause;
  const Tensor zeros = Tensor::zeros({8, 1});
  out.push_back(tolerance_check("invariants", "loss_d_at_zero_logits",
                                std::abs(static_cast<double>(loss_d(zeros, zeros).item()) - 2 * std::numbers::ln2), 1e-9));
  for (std::size_t l : {2, 36, 62}) {
    const Tensor logits = Tensor::full({5, l}, Real(0.37));
    std::vector<int> labels(5);
    for (std::size_t i = 0; i < 5; ++i) labels[i] = static_cast<int>(i % l);
    out.push_back(tolerance_check("invariants", "loss_cr_uniform L=" + std::to_string(l),
                                  std::abs(static_cast<double>(loss_cr(logits, labels).item()) - std::log(double(l))),
                                  1e-9));
  }
  std::mt19937_64 rng(seed);
  const Tensor img = random_tensor(rng, {8, 3, 64, 64}, 0, 1);
  out.push_back(tolerance_check("invariants", "loss_pixel_identical_images",
                                std::abs(static_cast<double>(loss_pixel_stacked(img, img.clone()).item())), 0));

  double worst = 0;
  bool exact = true;
  const Tensor logits = random_tensor(rng, {64, 1}, -40, 40);
  for (Real v : logits.data()) {
    const double p_real = 1 / (1 + std::exp(-static_cast<double>(v)));
    exact = exact && p_real + (1 - p_real) == 1.0;
  }
  out.push_back({"invariants", "discriminator_complement", exact, 0, "P(real) + P(fake) == 1"});
  const Tensor cls = random_tensor(rng, {16, 36}, -5, 5);
  const Tensor p = ops::negated_softmax(cls);
  for (std::size_t r = 0; r < 16; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < 36; ++j) s += p.data()[r * 36 + j];
    worst = std::max(worst, std::abs(s - 1));
  }
  out.push_back(tolerance_check("invariants", "softmax_rows_sum_to_one", worst, 1e-12));
  return out;
}

}  // namespace

bool VerifyReport::passed() const { return failures() == 0; }

std::size_t VerifyReport::failures() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += !c.passed;
  return n;
}

Suite parse_suite(const std::string& s) {
  if (s == "gradcheck") return Suite::Gradcheck;
  if (s == "oracle") return Suite::Oracle;
  if (s == "invariants") return Suite::Invariants;
  if (s == "all") return Suite::All;
  throw std::invalid_argument("unknown verify suite '" + s + "' (gradcheck|oracle|invariants|all)");
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::Gradcheck: return "gradcheck";
    case Suite::Oracle: return "oracle";
    case Suite::Invariants: return "invariants";
    case Suite::All: return "all";
  }
  return "?";
}

std::vector<CheckResult> run_gradcheck(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (const GradCase& c : standard_cases(seed)) {
    const GradCheckResult r = gradcheck(c);
    out.push_back({"gradcheck", r.op + " " + r.variant, r.passed, r.max_rel_error, r.detail});
  }
  const GradCheckResult bad = gradcheck(corrupted_case(seed));
  out.push_back({"gradcheck", "self_test rejects " + bad.op, !bad.passed && bad.op == "faulty_scale", bad.max_rel_error,
                 "deliberately wrong backward must fail"});
  return out;
}

std::vector<CheckResult> run_oracle(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  Graph::Pause pause;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = draw(rng, 1, 2), cin = draw(rng, 1, 3), cout = draw(rng, 1, 3);
    const std::size_t h = draw(rng, 3, 8), k = std::min<std::size_t>(draw(rng, 1, 5), h);
    const std::size_t stride = draw(rng, 1, 2), pad = draw(rng, 0, k / 2);
    const Tensor x = random_tensor(rng, {n, cin, h, h});
    const Tensor w = random_tensor(rng, {cout, cin, k, k});
    const Tensor b = random_tensor(rng, {cout});
    const std::string tag = shape_str(n, cin, h, h) + " k" + std::to_string(k) + " s" + std::to_string(stride) + " p" +
                            std::to_string(pad);
    out.push_back(tolerance_check("oracle", "conv2d " + tag,
                                  max_abs_diff(ops::conv2d(x, w, b, stride, pad), conv2d(x, w, b, stride, pad)),
                                  kOracleTolerance));
  }
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = draw(rng, 1, 2), cin = draw(rng, 1, 3), cout = draw(rng, 1, 3);
    const std::size_t h = draw(rng, 1, 4), k = trial % 2 ? 5 : 3, stride = draw(rng, 1, 2);
    const Tensor x = random_tensor(rng, {n, cin, h, h});
    const Tensor w = random_tensor(rng, {cin, cout, k, k});
    const Tensor b = random_tensor(rng, {cout});
    const std::string tag = shape_str(n, cin, h, h) + " k" + std::to_string(k) + " s" + std::to_string(stride);
    out.push_back(tolerance_check("oracle", "deconv2d " + tag,
                                  max_abs_diff(ops::deconv2d(x, w, b, stride), deconv2d(x, w, b, stride)),
                                  kOracleTolerance));
  }
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = draw(rng, 1, 2), c = draw(rng, 1, 3), h = draw(rng, 2, 8);
    const std::size_t k = draw(rng, 1, std::min<std::size_t>(h, 4)), stride = draw(rng, 1, k);
    const Tensor x = random_tensor(rng, {n, c, h, h});
    const std::string tag = shape_str(n, c, h, h) + " k" + std::to_string(k) + " s" + std::to_string(stride);
    out.push_back(tolerance_check("oracle", "maxpool2d " + tag,
                                  max_abs_diff(ops::maxpool2d(x, k, stride), maxpool2d(x, k, stride)), kOracleTolerance));
    out.push_back(tolerance_check("oracle", "avgpool2d " + tag,
                                  max_abs_diff(ops::avgpool2d(x, k, stride), avgpool2d(x, k, stride)), kOracleTolerance));
  }
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t n = draw(rng, 2, 3), c = draw(rng, 1, 3), h = draw(rng, 2, 6);
    const Tensor x = random_tensor(rng, {n, c, h, h});
    const Tensor gamma = random_tensor(rng, {c}, 0.5, 1.5);
    const Tensor beta = random_tensor(rng, {c});
    auto state = ops::BatchNormState::create(c);
    out.push_back(tolerance_check("oracle", "batchnorm2d " + shape_str(n, c, h, h),
                                  max_abs_diff(ops::batchnorm2d(x, gamma, beta, state, ops::Mode::Train),
                                               batchnorm2d_train(x, gamma, beta, state.eps)),
                                  kOracleTolerance));
  }
  {
    const Tensor x = random_tensor(rng, {3, 7});
    const Tensor w = random_tensor(rng, {7, 4});
    const Tensor b = random_tensor(rng, {4});
    out.push_back(tolerance_check("oracle", "linear [3,7]x[7,4]", max_abs_diff(ops::linear(x, w, b), linear(x, w, b)),
                                  kOracleTolerance));
  }

  // <conv(x), y> = <x, deconv(y)> when deconv shares the kernel and the
  // conv uses the padding the deconv crops.
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t n = draw(rng, 1, 2), a = draw(rng, 1, 3), c = draw(rng, 1, 3);
    const std::size_t k = trial % 2 ? 5 : 3, stride = trial < 2 ? 2 : 1, h = draw(rng, 2, 4);
    const Tensor w = random_tensor(rng, {a, c, k, k});
    const Tensor x = random_tensor(rng, {n, c, stride * h, stride * h});
    const Tensor y = random_tensor(rng, {n, a, h, h});
    const Tensor conv = ops::conv2d(x, w, Tensor(), stride, ops::deconv_padding(k));
    const Tensor deconv = ops::deconv2d(y, w, Tensor(), stride);
    const double lhs = dot(conv, y), rhs = dot(x, deconv);
    const std::string tag = "k" + std::to_string(k) + " s" + std::to_string(stride) + " y" + shape_str(n, a, h, h);
    out.push_back(tolerance_check("oracle", "conv_deconv_adjoint " + tag,
                                  conv.shape() == y.shape() ? std::abs(lhs - rhs) : INFINITY, kOracleTolerance));
  }
  // The recorded conv backward equals the direct input-gradient accumulation.
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t n = draw(rng, 1, 2), cin = draw(rng, 1, 3), cout = draw(rng, 1, 3), h = draw(rng, 3, 8);
    const std::size_t k = std::min<std::size_t>(draw(rng, 1, 5), h), stride = draw(rng, 1, 2), pad = draw(rng, 0, k / 2);
    Tensor x = random_tensor(rng, {n, cin, h, h});
    x.set_requires_grad(true);
    const Tensor w = random_tensor(rng, {cout, cin, k, k});
    Tensor dy;
    {
      Graph graph;
      Graph::Scope scope(graph);
      const Tensor yv = ops::conv2d(x, w, Tensor(), stride, pad);
      dy = random_tensor(rng, yv.shape());
      graph.backward(ops::sum(ops::mul(yv, dy)));
    }
    Tensor got(x.shape(), std::vector<Real>(x.grad().begin(), x.grad().end()));
    const std::string tag = shape_str(n, cin, h, h) + " k" + std::to_string(k) + " s" + std::to_string(stride) + " p" +
                            std::to_string(pad);
    out.push_back(tolerance_check("oracle", "conv2d_input_grad " + tag,
                                  max_abs_diff(got, conv2d_input_grad(dy, w, x.shape(), stride, pad)), kOracleTolerance));
  }
  {
    const Tensor logits = random_tensor(rng, {6, 9}, -4, 4);
    std::vector<int> labels{0, 3, 8, 2, 2, 5};
    out.push_back(tolerance_check(
        "oracle", "softmax_xent [6,9]",
        std::abs(static_cast<double>(ops::softmax_xent(logits, labels).item()) - softmax_xent(logits, labels)), 1e-12));
    const Tensor a = random_tensor(rng, {2, 3, 4, 4}), bt = random_tensor(rng, {2, 3, 4, 4});
    out.push_back(tolerance_check("oracle", "l1 [2,3,4,4]",
                                  std::abs(static_cast<double>(ops::l1_loss(a, bt).item()) - l1(a, bt)), 1e-12));
    const Tensor real = random_tensor(rng, {5, 1}, -6, 6), fake = random_tensor(rng, {5, 1}, -6, 6);
    out.push_back(tolerance_check(
        "oracle", "loss_d [5,1]",
        std::abs(static_cast<double>(loss_d(real, fake).item()) - discriminator_loss(real, fake)), 1e-12));
  }
#ifdef CGRN_SINGLE_PRECISION
  for (auto& c : out) {
    c.passed = c.value <= 1e-4;
    c.detail = "single precision tolerance 1e-4";
  }
#endif
  return out;
}

std::vector<CheckResult> run_invariants(std::uint64_t seed, const std::vector<std::size_t>& paper_batches) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  for (std::size_t b : {1, 2, 16}) append(shape_tables(NetworkConfig::desk(36, 4), b, seed));
  for (std::size_t b : paper_batches) append(shape_tables(NetworkConfig::paper(62, 4), b, seed));
  const NetworkConfig paper = NetworkConfig::paper(62, 4);
  out.push_back({"invariants", "paper ccn_fc_input == 1472", paper.ccn_feature_dim() == 1472,
                 static_cast<double>(paper.ccn_feature_dim()), ""});
  out.push_back({"invariants", "paper gdn_fc_input == 32768", paper.gdn_fc_dim() == 32768,
                 static_cast<double>(paper.gdn_fc_dim()), ""});
  {
    Cgrn desk(NetworkConfig::desk(36, 4), seed);
    append(partition_checks(desk, "desk"));
  }
  append(routing_checks(seed));
  append(generation_checks(seed));
  append(loss_identity_checks(seed));
  return out;
}

VerifyReport verify(Suite suite, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  auto append = [&](std::vector<CheckResult> v) { report.checks.insert(report.checks.end(), v.begin(), v.end()); };
  if (suite == Suite::Gradcheck || suite == Suite::All) append(run_gradcheck(seed));
  if (suite == Suite::Oracle || suite == Suite::All) append(run_oracle(seed));
  if (suite == Suite::Invariants || suite == Suite::All) append(run_invariants(seed));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

}  // namespace

void write_report(std::ostream& os, const VerifyReport& report) {
  char buf[64];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof buf, "%.3e", c.value);
    os << c.suite << ',' << csv_field(c.name) << ',' << (c.passed ? "PASS" : "FAIL") << ',' << buf << ','
       << csv_field(c.detail) << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.3f", report.seconds);
  os << "summary,checks=" << report.checks.size() << ",failures=" << report.failures() << ",seconds=" << buf << '\n';
}

}  // namespace cgrn::reference
