#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgrn/adam.hpp"
#include "cgrn/dataset.hpp"
#include "cgrn/graph.hpp"
#include "cgrn/losses.hpp"
#include "cgrn/model.hpp"

namespace cgrn {

struct Ablation {
  bool no_ggn = false;  // implies no_gdn: the discriminator judges generated glyphs
  bool no_gdn = false;
  bool single_font = false;

  bool generator() const { return !no_ggn; }
  bool discriminator() const { return !no_ggn && !no_gdn; }
};

struct TrainConfig {
  Real lambda = 100;
  AdamConfig adam;
  std::size_t batch = 16;
  int epochs = 20;
  std::uint64_t seed = 1;
  PixelNorm pixel_norm = PixelNorm::L1;
  Ablation ablation;

  void validate() const;
};

/// Losses of one step. Absent terms belong to disabled branches.
struct LossReport {
  Real l_cr = 0;
  std::optional<Real> l_pixel;
  std::optional<Real> l_d;
  Real composite = 0;  // lambda * L_CR + lambda * L_pixel - L_D
  Real lambda = 0;
  Real batch_acc = 0;
};

class NumericError : public std::runtime_error {
 public:
  NumericError(std::uint64_t step, std::string term);
  std::uint64_t step() const { return step_; }
  const std::string& term() const { return term_; }

 private:
  std::uint64_t step_;
  std::string term_;
};

/// Slot-major mini-batch: row j*B + b of `targets` is the glyph of sample b
/// in slot j, rendered in font fonts[j*B + b].
struct Batch {
  Tensor x;  // [B,3,H,W]
  std::vector<int> labels;
  Tensor targets;  // [m*B,3,H,W]
  std::vector<std::size_t> fonts;
  std::size_t slots = 0;

  std::size_t size() const { return labels.size(); }
};

/// Assembles samples `indices` for a model with `slots` fonts. When the
/// dataset carries more fonts than the model (single-font runs), every slot
/// uses target font 0.
Batch make_batch(std::span<const Sample> samples, std::size_t slots);
Batch make_batch(const Dataset& data, std::span<const std::size_t> indices, std::size_t slots);

/// Predicted class per row: the smallest logit.
std::vector<int> predict(const Tensor& logits);

/// Which terms enter the joint objective; used to isolate gradient routes.
struct JointTerms {
  bool cr = true;
  bool pixel = true;
  bool adversarial = true;
};

/// One discriminator update followed by one joint update of encoder,
/// classifier and generator per mini-batch.
class Trainer {
 public:
  Trainer(Cgrn& model, TrainConfig config);

  /// Full step: discriminator update on detached generator outputs, then the
  /// joint update with every joint gradient computed before any is applied.
  LossReport step(const Batch& batch);

  /// Discriminator update alone (runs its own forward). Returns L_D.
  Real discriminator_step(const Batch& batch);

  /// Joint-objective gradients at the current parameters, left in the
  /// parameter gradient buffers without updating anything. The
  /// discriminator is frozen meanwhile.
  LossReport joint_gradients(const Batch& batch, JointTerms terms = {});

  /// Commits the gradients from joint_gradients().
  void apply_joint();

  Cgrn& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  Adam& disc_optimizer() { return disc_opt_; }
  Adam& joint_optimizer() { return joint_opt_; }
  std::vector<Adam*> optimizers() { return {&disc_opt_, &joint_opt_}; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t s) { steps_ = s; }

 private:
  struct Forward {
    FeaturePyramid pyramid;
    Tensor logits;
    Tensor generated;  // [m*B,3,H,W] when the generator is enabled
    Tensor x_pairs;    // x repeated once per slot
  };

  Forward forward(const Batch& batch);
  Real update_discriminator(const Tensor& x_pairs, const Tensor& targets, const Tensor& fake);
  LossReport joint_backward(Graph& graph, const Batch& batch, Forward& fwd, JointTerms terms);
  void check_finite(const char* term, Real v) const;

  Cgrn& model_;
  TrainConfig config_;
  Adam disc_opt_;
  Adam joint_opt_;
  std::uint64_t steps_ = 0;
};

struct StepRecord {
  std::uint64_t step = 0;  // 1-based count of completed steps
  std::uint32_t epoch = 0;
  LossReport report;
  double wallclock_ms = 0;
};

struct LoopHooks {
  std::function<void(const StepRecord&)> on_step;
  /// Called after every epoch with the number of completed epochs; return
  /// false to stop training.
  std::function<bool(std::uint32_t)> on_epoch_end;
  /// Called after every `checkpoint_every` steps and at the end of training.
  std::function<void(std::uint64_t step, std::uint32_t epoch, std::uint32_t epoch_step)> on_checkpoint;
  std::uint64_t checkpoint_every = 0;
};

struct LoopStart {
  std::uint32_t epoch = 0;
  std::uint32_t epoch_step = 0;
};

struct LoopResult {
  std::uint64_t steps = 0;
  std::uint32_t epochs = 0;
  bool stopped_early = false;
  std::vector<Real> composites;
};

/// Visiting order of epoch `epoch`: a permutation drawn from
/// mix(seed, epoch). Each visited sample gets its slots reshuffled from
/// mix(seed, epoch, index).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint32_t epoch, std::size_t n);
std::vector<std::vector<std::size_t>> epoch_batches(std::uint64_t seed, std::uint32_t epoch, std::size_t n,
                                                    std::size_t batch);
/// Copy of data.samples[index] with the slot shuffle of `epoch` applied.
Sample epoch_sample(const Dataset& data, std::uint64_t seed, std::uint32_t epoch, std::size_t index);

LoopResult train_loop(Trainer& trainer, const Dataset& train, const LoopHooks& hooks = {}, LoopStart start = {});

}  // namespace cgrn
