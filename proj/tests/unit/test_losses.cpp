#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cgrn/losses.hpp"
#include "cgrn/ops.hpp"
#include "cgrn/reference/naive_ops.hpp"
#include "test_support.hpp"

using namespace cgrn;
using cgrn::testing::kExact;
using cgrn::testing::random_tensor;

#ifdef CGRN_SINGLE_PRECISION
constexpr double kDirect = 1e-5;
#else
constexpr double kDirect = 1e-10;
#endif

TEST(LossPixel, IdenticalImagesGiveZero) {
  Tensor a = random_tensor(Shape{2, 3, 8, 8}, 1, 0, 1);
  EXPECT_EQ(loss_pixel({a, a}, {a.clone(), a.clone()}).item(), 0);
  EXPECT_EQ(loss_pixel_stacked(a, a.clone()).item(), 0);
}

TEST(LossPixel, AveragesOverFonts) {
  Tensor t = Tensor::zeros(Shape{2, 3, 4, 4});
  const Tensor g1 = Tensor::full(Shape{2, 3, 4, 4}, Real(0.2));
  const Tensor g2 = Tensor::full(Shape{2, 3, 4, 4}, Real(0.4));
  EXPECT_NEAR(loss_pixel({g1, g2}, {t, t}).item(), 0.3, kExact);
}

TEST(LossPixel, EqualsPerFontRecomputation) {
  std::vector<Tensor> gen, tgt;
  double expected = 0;
  for (std::uint64_t f = 0; f < 4; ++f) {
    gen.push_back(random_tensor(Shape{3, 3, 8, 8}, 10 + f, 0, 1));
    tgt.push_back(random_tensor(Shape{3, 3, 8, 8}, 20 + f, 0, 1));
    expected += loss_pixel({gen.back()}, {tgt.back()}).item() / 4;
  }
  EXPECT_NEAR(loss_pixel(gen, tgt).item(), expected, kExact);
  EXPECT_NEAR(loss_pixel_stacked(ops::concat(gen, 0), ops::concat(tgt, 0)).item(), expected, kExact);
  EXPECT_NEAR(loss_pixel({gen[0]}, {tgt[0]}).item(), reference::l1(gen[0], tgt[0]), kExact);
}

TEST(LossPixel, L2SwitchUsesSquaredError) {
  const Tensor a = Tensor::full(Shape{1, 3, 2, 2}, Real(0.5));
  const Tensor b = Tensor::zeros(Shape{1, 3, 2, 2});
  EXPECT_NEAR(loss_pixel({a}, {b}, PixelNorm::L2).item(), 0.25, kExact);
  EXPECT_EQ(parse_pixel_norm("l2"), PixelNorm::L2);
  EXPECT_THROW(parse_pixel_norm("l3"), std::invalid_argument);
}

TEST(LossPixel, RejectsFontCountMismatch) {
  const Tensor a = Tensor::zeros(Shape{1, 3, 2, 2});
  EXPECT_THROW(loss_pixel({a, a}, {a}), ShapeError);
  EXPECT_THROW(loss_pixel({}, {}), ShapeError);
}

TEST(LossCr, ConfidentLogitsGiveNearZero) {
  Tensor logits = Tensor::full(Shape{2, 10}, 20);
  logits.data()[3] = -20;
  logits.data()[10 + 7] = -20;
  EXPECT_LT(loss_cr(logits, {3, 7}).item(), 1e-3);
}

TEST(LossCr, UniformLogitsGiveLogClassCount) {
  EXPECT_NEAR(loss_cr(Tensor::zeros(Shape{4, 10}), {0, 3, 5, 9}).item(), std::log(10.0), kExact);
  EXPECT_NEAR(loss_cr(Tensor::zeros(Shape{1, 10}), {0}).item(), 2.3026, 1e-4);
}

TEST(LossCr, DelegatesToSoftmaxCrossEntropy) {
  Tensor logits = random_tensor(Shape{5, 36}, 30, -4, 4);
  const std::vector<int> labels{0, 35, 17, 4, 4};
  EXPECT_EQ(loss_cr(logits, labels).item(), ops::softmax_xent(logits, labels).item());
}

TEST(LossD, ZeroLogitsGiveTwoLogTwo) {
  const Tensor z = Tensor::zeros(Shape{8, 1});
  EXPECT_NEAR(loss_d(z, z).item(), 2 * std::numbers::ln2, 1e-9);
}

TEST(LossD, PerfectDiscriminatorLimitIsZero) {
  double previous = INFINITY;
  for (Real s : {Real(1), Real(5), Real(20), Real(50), Real(400)}) {
    const double l = loss_d(Tensor::full(Shape{4, 1}, s), Tensor::full(Shape{4, 1}, -s)).item();
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_LT(l, previous);
    previous = l;
  }
  EXPECT_LT(previous, 1e-15);
}

TEST(LossD, MatchesDirectFormula) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Tensor real = random_tensor(Shape{12, 1}, 40 + seed, -6, 6);
    Tensor fake = random_tensor(Shape{12, 1}, 50 + seed, -6, 6);
    EXPECT_NEAR(loss_d(real, fake).item(), reference::discriminator_loss(real, fake), kDirect);
  }
  EXPECT_THROW(loss_d(Tensor::zeros(Shape{2, 1}), Tensor::zeros(Shape{3, 1})), ShapeError);
}

TEST(LossG, NonSaturatingTreatsFakesAsReal) {
  Tensor fake = random_tensor(Shape{6, 1}, 60, -3, 3);
  double expected = 0;
  for (Real v : fake.data()) expected += std::log1p(std::exp(-static_cast<double>(v)));
  EXPECT_NEAR(loss_g_nonsaturating(fake).item(), expected / 6, kDirect);
}

TEST(Losses, AreNonNegative) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Tensor logits = random_tensor(Shape{3, 5}, 70 + seed, -10, 10);
    EXPECT_GE(loss_cr(logits, {0, 2, 4}).item(), 0);
    EXPECT_GE(loss_d(random_tensor(Shape{3, 1}, 80 + seed, -10, 10), random_tensor(Shape{3, 1}, 90 + seed, -10, 10))
                  .item(),
              0);
    EXPECT_GE(loss_pixel({random_tensor(Shape{1, 3, 2, 2}, seed)}, {random_tensor(Shape{1, 3, 2, 2}, seed + 1)}).item(),
              0);
  }
}
