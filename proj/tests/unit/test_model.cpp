#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "cgrn/graph.hpp"
#include "cgrn/model.hpp"
#include "cgrn/trainer.hpp"
#include "test_support.hpp"

using namespace cgrn;
using cgrn::testing::bit_equal;
using cgrn::testing::random_tensor;

namespace {

ShapeTrace run_traced(Cgrn& model, std::size_t batch) {
  const NetworkConfig& c = model.config();
  ShapeTrace trace;
  model.set_trace(&trace);
  Graph::Pause pause;
  Tensor x = random_tensor(Shape{batch, 3, 64, 64}, 7, 0, 1);
  FeaturePyramid p = model.extract(x, ops::Mode::Train);
  model.classify(p);
  std::vector<std::size_t> fonts;
  for (std::size_t j = 0; j < c.num_fonts; ++j) fonts.insert(fonts.end(), batch, j);
  Tensor gen = model.generate_slots(p, fonts, c.num_fonts, ops::Mode::Train);
  model.discriminate(ops::repeat_batch(x, c.num_fonts), gen, ops::Mode::Train);
  model.set_trace(nullptr);
  return trace;
}

std::map<std::string, Shape> by_name(const ShapeTrace& t) {
  std::map<std::string, Shape> out;
  for (const auto& l : t) out[l.name] = l.shape;
  return out;
}

Batch random_batch(const NetworkConfig& c, std::size_t batch, std::uint64_t seed) {
  Batch b;
  b.x = random_tensor(Shape{batch, 3, 64, 64}, seed, 0, 1);
  b.targets = random_tensor(Shape{c.num_fonts * batch, 3, 64, 64}, seed + 1, 0, 1);
  for (std::size_t i = 0; i < batch; ++i) b.labels.push_back(static_cast<int>((i * 7 + seed) % c.num_classes));
  for (std::size_t j = 0; j < c.num_fonts; ++j)
    for (std::size_t i = 0; i < batch; ++i) b.fonts.push_back((i + j) % c.num_fonts);
  b.slots = c.num_fonts;
  return b;
}

bool any_nonzero(const Tensor& t) {
  if (!t.has_grad()) return false;
  for (Real v : t.grad())
    if (v != 0) return true;
  return false;
}

}  // namespace

TEST(NetworkConfig, FeatureWidthsAtFullWidth) {
  const NetworkConfig paper = NetworkConfig::paper();
  EXPECT_EQ(paper.ccn_feature_dim(), 1472u);
  EXPECT_EQ(paper.gdn_fc_dim(), 32768u);
  EXPECT_EQ(paper.num_classes, 62u);
  EXPECT_EQ(paper.num_fonts, 4u);
  const NetworkConfig desk = NetworkConfig::desk();
  EXPECT_EQ(desk.ccn_feature_dim(), 1472u / 8);
  EXPECT_EQ(desk.gdn_fc_dim(), 8u * 8 * 64);
}

TEST(NetworkConfig, RejectsFractionalChannels) {
  NetworkConfig c = NetworkConfig::desk();
  c.width_mult = Rational{1, 7};
  EXPECT_THROW(c.validate(), ShapeError);
  c.width_mult = Rational{1, 1024};
  EXPECT_THROW(c.validate(), ShapeError);
  EXPECT_EQ(Rational::parse("1/8"), (Rational{1, 8}));
  EXPECT_EQ(Rational::parse("1"), (Rational{1, 1}));
}

TEST(ShapeTable, PaperPresetMatchesPublishedLayers) {
  Cgrn model(NetworkConfig::paper(), 1);
  const auto shapes = by_name(run_traced(model, 1));
  EXPECT_EQ(shapes.at("E_conv1_1"), (Shape{1, 64, 64, 64}));
  EXPECT_EQ(shapes.at("E_pool1"), (Shape{1, 64, 32, 32}));
  EXPECT_EQ(shapes.at("E_pool2"), (Shape{1, 128, 16, 16}));
  EXPECT_EQ(shapes.at("E_pool3"), (Shape{1, 256, 8, 8}));
  EXPECT_EQ(shapes.at("E_pool4"), (Shape{1, 512, 4, 4}));
  EXPECT_EQ(shapes.at("E_pool5"), (Shape{1, 512, 1, 1}));
  EXPECT_EQ(shapes.at("C_concat"), (Shape{1, 1472}));
  EXPECT_EQ(shapes.at("C_fc"), (Shape{1, 62}));
  EXPECT_EQ(shapes.at("G_deconv1"), (Shape{4, 512, 2, 2}));
  EXPECT_EQ(shapes.at("G_deconv2"), (Shape{4, 512, 4, 4}));
  EXPECT_EQ(shapes.at("G_deconv3"), (Shape{4, 256, 8, 8}));
  EXPECT_EQ(shapes.at("G_deconv4"), (Shape{4, 128, 16, 16}));
  EXPECT_EQ(shapes.at("G_deconv5"), (Shape{4, 64, 32, 32}));
  EXPECT_EQ(shapes.at("G_deconv6"), (Shape{4, 3, 64, 64}));
  EXPECT_EQ(shapes.at("D_conv1"), (Shape{4, 64, 32, 32}));
  EXPECT_EQ(shapes.at("D_conv4"), (Shape{4, 512, 8, 8}));
  EXPECT_EQ(shapes.at("D_flatten"), (Shape{4, 32768}));
  EXPECT_EQ(shapes.at("D_fc"), (Shape{4, 1}));
}

class ShapeConformance : public ::testing::TestWithParam<std::tuple<Preset, std::size_t>> {};

TEST_P(ShapeConformance, TraceEqualsGeneratedTable) {
  const auto [preset, batch] = GetParam();
  const NetworkConfig c = preset == Preset::Paper ? NetworkConfig::paper() : NetworkConfig::desk();
  Cgrn model(c, 3);
  const ShapeTrace trace = run_traced(model, batch);
  const auto expected = expected_shapes(c, batch);
  ASSERT_EQ(trace.size(), expected.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(trace[i].name, expected[i].name);
    EXPECT_EQ(trace[i].shape, expected[i].shape) << trace[i].name;
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, ShapeConformance,
                         ::testing::Combine(::testing::Values(Preset::Desk, Preset::Paper),
                                            ::testing::Values(std::size_t{1}, std::size_t{2}, std::size_t{16})),
                         [](const auto& info) {
                           return to_string(std::get<0>(info.param)) + "_B" +
                                  std::to_string(std::get<1>(info.param));
                         });

TEST(Encoder, DeskChannelsAreScaled) {
  Cgrn model(NetworkConfig::desk(), 2);
  Graph::Pause pause;
  const FeaturePyramid p = model.extract(random_tensor(Shape{2, 3, 64, 64}, 1, 0, 1), ops::Mode::Train);
  const std::size_t ch[5] = {8, 16, 32, 64, 64};
  const std::size_t hw[5] = {32, 16, 8, 4, 1};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(p.taps[i].shape(), (Shape{2, ch[i], hw[i], hw[i]}));
}

TEST(Encoder, ZeroImageGivesFiniteFeatures) {
  Cgrn model(NetworkConfig::desk(), 2);
  Graph::Pause pause;
  const FeaturePyramid p = model.extract(Tensor::zeros(Shape{2, 3, 64, 64}), ops::Mode::Train);
  for (const auto& t : p.taps)
    for (Real v : t.data()) ASSERT_TRUE(std::isfinite(v));
}

TEST(Encoder, RejectsWrongImageSize) {
  Cgrn model(NetworkConfig::desk(), 2);
  Graph::Pause pause;
  EXPECT_THROW(model.extract(Tensor::zeros(Shape{1, 3, 32, 32}), ops::Mode::Train), ShapeError);
  EXPECT_THROW(model.extract(Tensor::zeros(Shape{1, 1, 64, 64}), ops::Mode::Train), ShapeError);
}

TEST(Classifier, ZeroWeightsGiveUniformProbabilities) {
  Cgrn model(NetworkConfig::desk(), 4);
  for (const auto& p : model.store().slice(Slice::Classifier)) {
    Tensor t = p.tensor;
    for (auto& v : t.data()) v = 0;
  }
  Graph::Pause pause;
  const Tensor logits = model.classify(model.extract(random_tensor(Shape{3, 3, 64, 64}, 5, 0, 1), ops::Mode::Train));
  for (Real v : logits.data()) EXPECT_EQ(v, 0);
  const Tensor probs = ops::negated_softmax(logits);
  for (Real v : probs.data()) EXPECT_NEAR(v, 1.0 / 36, cgrn::testing::kExact);
}

TEST(Classifier, ProbabilityRowsSumToOne) {
  Cgrn model(NetworkConfig::desk(), 4);
  Graph::Pause pause;
  const Tensor probs = ops::negated_softmax(
      model.classify(model.extract(random_tensor(Shape{4, 3, 64, 64}, 6, 0, 1), ops::Mode::Train)));
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < 36; ++j) s += probs.ptr()[r * 36 + j];
    EXPECT_NEAR(s, 1.0, cgrn::testing::kOracle);
  }
}

TEST(Generator, OutputIsImageInUnitRange) {
  Cgrn model(NetworkConfig::desk(), 5);
  Graph::Pause pause;
  const FeaturePyramid p = model.extract(random_tensor(Shape{1, 3, 64, 64}, 7, 0, 1), ops::Mode::Train);
  for (std::size_t f = 0; f < 4; ++f) {
    const Tensor g = model.generate(p, f, ops::Mode::Eval);
    ASSERT_EQ(g.shape(), (Shape{1, 3, 64, 64}));
    for (Real v : g.data()) {
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 1);
    }
  }
  EXPECT_THROW(model.generate(p, 4, ops::Mode::Eval), ShapeError);
}

TEST(Generator, BatchedGenerationEqualsPerFontCalls) {
  for (std::size_t m : {1u, 4u}) {
    Cgrn model(NetworkConfig::desk(36, m), 6);
    Graph::Pause pause;
    const FeaturePyramid p = model.extract(random_tensor(Shape{3, 3, 64, 64}, 8, 0, 1), ops::Mode::Train);
    for (ops::Mode mode : {ops::Mode::Train, ops::Mode::Eval}) {
      const auto all = model.generate_all(p, mode);
      ASSERT_EQ(all.size(), m);
      for (std::size_t f = 0; f < m; ++f) EXPECT_TRUE(bit_equal(all[f], model.generate(p, f, mode))) << f;
    }
  }
}

TEST(Generator, FontEmbeddingChangesOutput) {
  Cgrn model(NetworkConfig::desk(), 9);
  Graph::Pause pause;
  const FeaturePyramid p = model.extract(random_tensor(Shape{2, 3, 64, 64}, 9, 0, 1), ops::Mode::Train);
  EXPECT_FALSE(bit_equal(model.generate(p, 0, ops::Mode::Eval), model.generate(p, 1, ops::Mode::Eval)));
}

TEST(Discriminator, ZeroWeightsGiveEvenOdds) {
  Cgrn model(NetworkConfig::desk(), 10);
  for (const auto& p : model.store().slice(Slice::Discriminator)) {
    Tensor t = p.tensor;
    for (auto& v : t.data()) v = 0;
  }
  Graph::Pause pause;
  const Tensor d = model.discriminate(random_tensor(Shape{2, 3, 64, 64}, 11, 0, 1),
                                      random_tensor(Shape{2, 3, 64, 64}, 12, 0, 1), ops::Mode::Train);
  ASSERT_EQ(d.shape(), (Shape{2, 1}));
  for (Real v : d.data()) EXPECT_EQ(v, 0);
  const Tensor p = ops::sigmoid(d);
  for (Real v : p.data()) EXPECT_EQ(v, Real(0.5));
  EXPECT_THROW(model.discriminate(Tensor::zeros(Shape{2, 3, 64, 64}), Tensor::zeros(Shape{1, 3, 64, 64}),
                                  ops::Mode::Train),
               ShapeError);
}

TEST(Discriminator, RealAndFakeProbabilitiesAreComplements) {
  for (Real logit : {Real(-30), Real(-1.5), Real(0), Real(0.25), Real(12)}) {
    const Real p_real = ops::sigmoid(Tensor::scalar(logit)).item();
    const Real p_fake = ops::sigmoid(Tensor::scalar(-logit)).item();
    EXPECT_NEAR(p_real + p_fake, 1.0, 1e-15);
  }
}

TEST(Init, SameSeedGivesIdenticalStore) {
  Cgrn a(NetworkConfig::desk(), 11);
  Cgrn b(NetworkConfig::desk(), 11);
  Cgrn c(NetworkConfig::desk(), 12);
  ASSERT_EQ(a.store().parameters().size(), b.store().parameters().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.store().parameters().size(); ++i) {
    EXPECT_EQ(a.store().parameters()[i].name, b.store().parameters()[i].name);
    EXPECT_TRUE(bit_equal(a.store().parameters()[i].tensor, b.store().parameters()[i].tensor));
    any_diff = any_diff || !bit_equal(a.store().parameters()[i].tensor, c.store().parameters()[i].tensor);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Init, WeightsHaveConfiguredSpread) {
  Cgrn model(NetworkConfig::paper(), 13);
  bool checked = false;
  for (const auto& p : model.store().parameters()) {
    if (p.tensor.numel() < 100000 || p.tensor.rank() < 2) continue;
    double s = 0, ss = 0;
    const double n = static_cast<double>(p.tensor.numel());
    for (Real v : p.tensor.data()) s += v;
    const double mu = s / n;
    for (Real v : p.tensor.data()) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / (n - 1));
    EXPECT_GE(sd, 0.0195) << p.name;
    EXPECT_LE(sd, 0.0205) << p.name;
    checked = true;
  }
  EXPECT_TRUE(checked);
}

TEST(Init, NormalizationStartsAtIdentity) {
  Cgrn model(NetworkConfig::desk(), 14);
  std::size_t gammas = 0;
  for (const auto& p : model.store().parameters()) {
    const bool gamma = p.name.ends_with("gamma");
    const bool zero = p.name.ends_with("beta") || p.name.ends_with("bias");
    for (Real v : p.tensor.data()) {
      if (gamma) {
        EXPECT_EQ(v, 1) << p.name;
      }
      if (zero) {
        EXPECT_EQ(v, 0) << p.name;
      }
    }
    gammas += gamma;
  }
  EXPECT_GT(gammas, 0u);
}

TEST(Partition, SlicesAreDisjointAndExhaustive) {
  Cgrn model(NetworkConfig::desk(), 15);
  std::set<std::string> names;
  std::size_t total = 0;
  for (Slice s : {Slice::Encoder, Slice::Classifier, Slice::Generator, Slice::Discriminator}) {
    for (const auto& p : model.store().slice(s)) {
      EXPECT_TRUE(names.insert(p.name).second) << p.name;
      EXPECT_TRUE(p.name.starts_with(slice_prefix(s)) || (s == Slice::Generator && p.name.starts_with(kFontEmbeddingPrefix)))
          << p.name;
      ++total;
    }
  }
  EXPECT_EQ(total, model.store().parameters().size());
  bool table_in_g = false;
  for (const auto& p : model.store().slice(Slice::Generator)) {
    table_in_g = table_in_g || p.tensor.same_storage(model.font_embeddings());
  }
  EXPECT_TRUE(table_in_g);
  EXPECT_EQ(model.font_embeddings().shape(), (Shape{4, 64}));
}

TEST(Partition, CompositeGradientsReachExactlyTheRightSlices) {
  const NetworkConfig c = NetworkConfig::desk(10, 3);
  Cgrn model(c, 16);
  TrainConfig tc;
  tc.batch = 4;
  Trainer trainer(model, tc);
  const Batch b = random_batch(c, 4, 17);

  trainer.joint_gradients(b);
  for (Slice s : {Slice::Encoder, Slice::Classifier, Slice::Generator}) {
    for (const auto& p : model.store().slice(s)) EXPECT_TRUE(any_nonzero(p.tensor)) << p.name;
  }
  for (const auto& p : model.store().slice(Slice::Discriminator)) EXPECT_FALSE(any_nonzero(p.tensor)) << p.name;
  model.store().zero_grad();

  trainer.joint_gradients(b, JointTerms{false, true, true});
  for (const auto& p : model.store().slice(Slice::Classifier)) EXPECT_FALSE(any_nonzero(p.tensor)) << p.name;
  model.store().zero_grad();

  trainer.joint_gradients(b, JointTerms{true, false, false});
  for (const auto& p : model.store().slice(Slice::Generator)) EXPECT_FALSE(any_nonzero(p.tensor)) << p.name;
  model.store().zero_grad();

  Graph g;
  Graph::Scope scope(g);
  const FeaturePyramid p = model.extract(b.x, ops::Mode::Train);
  const Tensor gen = model.generate_slots(p, b.fonts, b.slots, ops::Mode::Train);
  const Tensor d = model.discriminate(ops::repeat_batch(b.x, b.slots), gen, ops::Mode::Train);
  g.backward(ops::mean(d));
  for (const auto& q : model.store().slice(Slice::Discriminator)) EXPECT_TRUE(any_nonzero(q.tensor)) << q.name;
  for (const auto& q : model.store().slice(Slice::Classifier)) EXPECT_FALSE(any_nonzero(q.tensor)) << q.name;
  model.store().zero_grad();
}
