#include <benchmark/benchmark.h>

#include <random>

#include "cgrn/graph.hpp"
#include "cgrn/losses.hpp"
#include "cgrn/model.hpp"
#include "cgrn/ops.hpp"
#include "cgrn/trainer.hpp"

namespace {

using namespace cgrn;

Tensor random_tensor(std::mt19937_64& rng, Shape s, bool grad = false) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t(std::move(s));
  for (Real& v : t.data()) v = static_cast<Real>(u(rng));
  t.set_requires_grad(grad);
  return t;
}

void backward_through(const Tensor& y) {
  Graph* g = Graph::active();
  g->backward(ops::sum(y));
}

// args: batch, channels in, channels out, extent, kernel, stride
void BM_Conv2dForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto b = static_cast<std::size_t>(state.range(0)), cin = static_cast<std::size_t>(state.range(1)),
             cout = static_cast<std::size_t>(state.range(2)), h = static_cast<std::size_t>(state.range(3)),
             k = static_cast<std::size_t>(state.range(4)), s = static_cast<std::size_t>(state.range(5));
  Tensor x = random_tensor(rng, {b, cin, h, h}, true);
  Tensor w = random_tensor(rng, {cout, cin, k, k}, true);
  for (auto _ : state) {
    Graph graph;
    Graph::Scope scope(graph);
    backward_through(ops::conv2d(x, w, Tensor(), s, (k - 1) / 2));
    x.drop_grad();
    w.drop_grad();
  }
}
BENCHMARK(BM_Conv2dForwardBackward)
    ->Args({16, 3, 8, 64, 3, 1})
    ->Args({16, 8, 8, 64, 3, 1})
    ->Args({16, 64, 64, 4, 3, 1})
    ->Args({64, 6, 8, 64, 5, 2})
    ->Unit(benchmark::kMillisecond);

void BM_Deconv2dForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto b = static_cast<std::size_t>(state.range(0)), cin = static_cast<std::size_t>(state.range(1)),
             cout = static_cast<std::size_t>(state.range(2)), h = static_cast<std::size_t>(state.range(3));
  Tensor x = random_tensor(rng, {b, cin, h, h}, true);
  Tensor w = random_tensor(rng, {cin, cout, 5, 5}, true);
  for (auto _ : state) {
    Graph graph;
    Graph::Scope scope(graph);
    backward_through(ops::deconv2d(x, w, Tensor(), 2));
    x.drop_grad();
    w.drop_grad();
  }
}
BENCHMARK(BM_Deconv2dForwardBackward)
    ->Args({64, 72, 64, 1})
    ->Args({64, 24, 3, 32})
    ->Unit(benchmark::kMillisecond);

Batch desk_batch(std::mt19937_64& rng, const NetworkConfig& config, std::size_t batch) {
  std::uniform_real_distribution<double> u(0, 1);
  Batch b;
  b.x = Tensor({batch, 3, 64, 64});
  for (Real& v : b.x.data()) v = static_cast<Real>(u(rng));
  b.targets = Tensor({config.num_fonts * batch, 3, 64, 64});
  for (Real& v : b.targets.data()) v = static_cast<Real>(u(rng) > 0.5);
  for (std::size_t i = 0; i < batch; ++i) b.labels.push_back(static_cast<int>(i % config.num_classes));
  for (std::size_t j = 0; j < config.num_fonts; ++j) b.fonts.insert(b.fonts.end(), batch, j);
  b.slots = config.num_fonts;
  return b;
}

void BM_EncoderForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const NetworkConfig config = NetworkConfig::desk(36, 4);
  Cgrn model(config, 1);
  const Batch batch = desk_batch(rng, config, 16);
  for (auto _ : state) {
    Graph graph;
    Graph::Scope scope(graph);
    const FeaturePyramid p = model.extract(batch.x, ops::Mode::Train);
    graph.backward(loss_cr(model.classify(p), batch.labels));
    model.store().zero_grad();
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Unit(benchmark::kMillisecond);

void BM_GeneratorForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const NetworkConfig config = NetworkConfig::desk(36, 4);
  Cgrn model(config, 1);
  const Batch batch = desk_batch(rng, config, 16);
  FeaturePyramid p;
  {
    Graph::Pause pause;
    p = model.extract(batch.x, ops::Mode::Train);
  }
  for (auto _ : state) {
    Graph graph;
    Graph::Scope scope(graph);
    const Tensor g = model.generate_slots(p, batch.fonts, config.num_fonts, ops::Mode::Train);
    graph.backward(loss_pixel_stacked(g, batch.targets));
    model.store().zero_grad();
  }
}
BENCHMARK(BM_GeneratorForwardBackward)->Unit(benchmark::kMillisecond);

void BM_DiscriminatorForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const NetworkConfig config = NetworkConfig::desk(36, 4);
  Cgrn model(config, 1);
  const Batch batch = desk_batch(rng, config, 16);
  const Tensor pairs = ops::repeat_batch(batch.x, config.num_fonts);
  for (auto _ : state) {
    Graph graph;
    Graph::Scope scope(graph);
    const Tensor d = model.discriminate(pairs, batch.targets, ops::Mode::Train);
    graph.backward(ops::bce_with_logits(d, 1));
    model.store().zero_grad();
  }
}
BENCHMARK(BM_DiscriminatorForwardBackward)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const NetworkConfig config = NetworkConfig::desk(36, 4);
  Cgrn model(config, 1);
  TrainConfig tc;
  tc.batch = 16;
  Trainer trainer(model, tc);
  const Batch batch = desk_batch(rng, config, 16);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
