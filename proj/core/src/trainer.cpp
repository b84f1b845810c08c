#include "cgrn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "cgrn/graph.hpp"
#include "cgrn/rng.hpp"

namespace cgrn {

namespace {

// Disables gradient tracking for a set of parameters for the guard's lifetime.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<NamedTensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.tensor.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.tensor.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<NamedTensor> params_;
};

Real batch_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const auto pred = predict(logits);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
  return static_cast<Real>(ok) / static_cast<Real>(pred.size());
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train: " + what); };
  if (!(lambda >= 0) || !std::isfinite(lambda)) fail("lambda must be a finite non-negative number");
  if (!(adam.lr > 0)) fail("lr must be positive");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1)) fail("betas must lie in [0, 1)");
  if (!(adam.eps > 0)) fail("eps must be positive");
  if (batch < 2) fail("batch must be >= 2 (batch normalization)");
  if (epochs < 1) fail("epochs must be >= 1");
}

NumericError::NumericError(std::uint64_t step, std::string term)
    : std::runtime_error("non-finite " + term + " at step " + std::to_string(step)), step_(step), term_(std::move(term)) {}

Batch make_batch(std::span<const Sample> samples, std::size_t slots) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t b = samples.size();
  const std::size_t h = samples[0].x.height, w = samples[0].x.width;
  Batch out;
  out.slots = slots;
  out.x = Tensor(Shape{b, 3, h, w});
  out.targets = Tensor(Shape{slots * b, 3, h, w});
  out.fonts.resize(slots * b);
  for (std::size_t i = 0; i < b; ++i) {
    const Sample& s = samples[i];
    copy_into(s.x, out.x, i);
    out.labels.push_back(s.label);
    if (s.slots() == slots) {
      for (std::size_t j = 0; j < slots; ++j) {
        copy_into(*s.targets[j], out.targets, j * b + i);
        out.fonts[j * b + i] = s.font_perm[j];
      }
    } else if (slots == 1) {
      // Single-font runs pair the only embedding with the first target font.
      std::size_t first = 0;
      while (first < s.slots() && s.font_perm[first] != 0) ++first;
      if (first == s.slots()) throw std::invalid_argument("make_batch: sample lacks target font 0");
      copy_into(*s.targets[first], out.targets, i);
      out.fonts[i] = 0;
    } else {
      throw std::invalid_argument("make_batch: sample has " + std::to_string(s.slots()) + " font slots, model has " +
                                  std::to_string(slots));
    }
  }
  return out;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices, std::size_t slots) {
  std::vector<Sample> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(data.samples.at(i));
  return make_batch(picked, slots);
}

std::vector<int> predict(const Tensor& logits) {
  const std::size_t b = logits.dim(0), l = logits.dim(1);
  std::vector<int> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    const Real* row = logits.ptr() + i * l;
    std::size_t best = 0;
    for (std::size_t j = 1; j < l; ++j) {
      if (row[j] < row[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

Trainer::Trainer(Cgrn& model, TrainConfig config) : model_(model), config_(std::move(config)) {
  config_.validate();
  if (config_.ablation.no_ggn) config_.ablation.no_gdn = true;
  const ParameterStore& store = model_.store();
  disc_opt_ = Adam(store.slice(Slice::Discriminator), config_.adam);
  joint_opt_ = Adam(config_.ablation.generator()
                        ? store.slices({Slice::Encoder, Slice::Classifier, Slice::Generator})
                        : store.slices({Slice::Encoder, Slice::Classifier}),
                    config_.adam);
}

void Trainer::check_finite(const char* term, Real v) const {
  if (!std::isfinite(v)) throw NumericError(steps_ + 1, term);
}

Trainer::Forward Trainer::forward(const Batch& batch) {
  if (batch.slots != model_.config().num_fonts) {
    throw std::invalid_argument("batch built for " + std::to_string(batch.slots) + " fonts, model has " +
                                std::to_string(model_.config().num_fonts));
  }
  Forward f;
  f.pyramid = model_.extract(batch.x, ops::Mode::Train);
  f.logits = model_.classify(f.pyramid);
  if (config_.ablation.generator()) {
    f.generated = model_.generate_slots(f.pyramid, batch.fonts, batch.slots, ops::Mode::Train);
    Graph::Pause pause;
    f.x_pairs = ops::repeat_batch(batch.x, batch.slots);
  }
  return f;
}

Real Trainer::update_discriminator(const Tensor& x_pairs, const Tensor& targets, const Tensor& fake) {
  Graph graph;
  Graph::Scope scope(graph);
  const Tensor real_logits = model_.discriminate(x_pairs, targets, ops::Mode::Train);
  const Tensor fake_logits = model_.discriminate(x_pairs, fake, ops::Mode::Train);
  const Tensor ld = loss_d(real_logits, fake_logits);
  check_finite("L_D (discriminator update)", ld.item());
  graph.backward(ld);
  disc_opt_.step();
  return ld.item();
}

Real Trainer::discriminator_step(const Batch& batch) {
  if (!config_.ablation.discriminator()) throw std::logic_error("discriminator is disabled by the ablation");
  Forward f;
  {
    Graph::Pause pause;
    f = forward(batch);
  }
  return update_discriminator(f.x_pairs, batch.targets, f.generated.detach());
}

LossReport Trainer::joint_backward(Graph& graph, const Batch& batch, Forward& fwd, JointTerms terms) {
  const Real lambda = config_.lambda;
  LossReport r;
  r.lambda = lambda;
  r.batch_acc = batch_accuracy(fwd.logits, batch.labels);

  std::vector<Tensor> parts;
  std::vector<Real> coeffs;
  const Tensor l_cr = loss_cr(fwd.logits, batch.labels);
  r.l_cr = l_cr.item();
  check_finite("L_CR", r.l_cr);
  if (terms.cr) {
    parts.push_back(l_cr);
    coeffs.push_back(lambda);
  }
  Real composite = lambda * r.l_cr;

  if (config_.ablation.generator()) {
    const Tensor l_pix = loss_pixel_stacked(fwd.generated, batch.targets, config_.pixel_norm);
    r.l_pixel = l_pix.item();
    check_finite("L_pixel", *r.l_pixel);
    composite += lambda * *r.l_pixel;
    if (terms.pixel) {
      parts.push_back(l_pix);
      coeffs.push_back(lambda);
    }
  }

  std::optional<FreezeGuard> frozen;
  if (config_.ablation.discriminator()) {
    frozen.emplace(model_.store().slice(Slice::Discriminator));
    Tensor real_logits;
    {
      Graph::Pause pause;
      real_logits = model_.discriminate(fwd.x_pairs, batch.targets, ops::Mode::Train);
    }
    const Tensor fake_logits = model_.discriminate(fwd.x_pairs, fwd.generated, ops::Mode::Train);
    const Tensor ld = loss_d(real_logits, fake_logits);
    r.l_d = ld.item();
    check_finite("L_D", *r.l_d);
    composite -= *r.l_d;
    if (terms.adversarial) {
      if (model_.config().gan_mode == GanMode::Minimax) {
        parts.push_back(ld);
        coeffs.push_back(-1);
      } else {
        parts.push_back(loss_g_nonsaturating(fake_logits));
        coeffs.push_back(1);
      }
    }
  }
  if (!parts.empty()) {
    const Tensor objective = ops::weighted_sum(parts, coeffs);
    check_finite("composite", objective.item());
    graph.backward(objective);
  }
  r.composite = composite;
  return r;
}

LossReport Trainer::joint_gradients(const Batch& batch, JointTerms terms) {
  joint_opt_.zero_grad();
  Graph graph;
  Graph::Scope scope(graph);
  Forward f = forward(batch);
  return joint_backward(graph, batch, f, terms);
}

void Trainer::apply_joint() { joint_opt_.step(); }

LossReport Trainer::step(const Batch& batch) {
  Graph graph;
  Graph::Scope scope(graph);
  // The encoder/generator forward is shared by both phases: the
  // discriminator update does not touch its parameters, so a recomputed
  // forward would produce identical values.
  Forward f = forward(batch);
  if (config_.ablation.discriminator()) {
    Tensor fake;
    {
      Graph::Pause pause;
      fake = f.generated.detach();
    }
    update_discriminator(f.x_pairs, batch.targets, fake);
  }
  joint_opt_.zero_grad();
  LossReport r = joint_backward(graph, batch, f, {});
  joint_opt_.step();
  ++steps_;
  return r;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint32_t epoch, std::size_t n) {
  std::mt19937_64 rng(mix_seed(seed, {0x5u, epoch}));
  return draw_permutation(n, rng);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::uint64_t seed, std::uint32_t epoch, std::size_t n,
                                                    std::size_t batch) {
  const auto order = epoch_order(seed, epoch, n);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch)));
  }
  // A trailing single sample cannot be batch-normalized; it joins the previous batch.
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

Sample epoch_sample(const Dataset& data, std::uint64_t seed, std::uint32_t epoch, std::size_t index) {
  std::mt19937_64 rng(mix_seed(seed, {0x6u, epoch, index}));
  return shuffle_fonts(data.samples.at(index), rng);
}

LoopResult train_loop(Trainer& trainer, const Dataset& train, const LoopHooks& hooks, LoopStart start) {
  if (train.empty()) throw std::invalid_argument("train_loop: empty training set");
  const TrainConfig& cfg = trainer.config();
  const std::size_t slots = trainer.model().config().num_fonts;
  LoopResult result;
  result.steps = trainer.steps();
  const auto t0 = std::chrono::steady_clock::now();

  for (std::uint32_t epoch = start.epoch; epoch < static_cast<std::uint32_t>(cfg.epochs); ++epoch) {
    const auto batches = epoch_batches(cfg.seed, epoch, train.size(), cfg.batch);
    const std::uint32_t first = epoch == start.epoch ? start.epoch_step : 0;
    for (std::uint32_t k = first; k < batches.size(); ++k) {
      std::vector<Sample> samples;
      samples.reserve(batches[k].size());
      for (std::size_t idx : batches[k]) samples.push_back(epoch_sample(train, cfg.seed, epoch, idx));
      const Batch batch = make_batch(samples, slots);
      StepRecord rec;
      rec.report = trainer.step(batch);
      rec.step = trainer.steps();
      rec.epoch = epoch;
      rec.wallclock_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.steps = rec.step;
      result.composites.push_back(rec.report.composite);
      if (hooks.on_step) hooks.on_step(rec);
      if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && rec.step % hooks.checkpoint_every == 0) {
        const bool epoch_done = k + 1 == batches.size();
        hooks.on_checkpoint(rec.step, epoch_done ? epoch + 1 : epoch, epoch_done ? 0 : k + 1);
      }
    }
    result.epochs = epoch + 1;
    if (hooks.on_epoch_end && !hooks.on_epoch_end(epoch + 1)) {
      result.stopped_early = epoch + 1 < static_cast<std::uint32_t>(cfg.epochs);
      break;
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(result.steps, result.epochs, 0);
  return result;
}

}  // namespace cgrn
