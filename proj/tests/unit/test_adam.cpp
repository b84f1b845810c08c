#include <gtest/gtest.h>

#include <cmath>

#include "cgrn/adam.hpp"
#include "test_support.hpp"

using namespace cgrn;
using cgrn::testing::random_tensor;

namespace {

Tensor param(Shape shape, std::uint64_t seed) { return random_tensor(std::move(shape), seed, -1, 1, true); }

void set_grad(Tensor& t, Real value) {
  for (auto& g : t.ensure_grad()) g = value;
}

}  // namespace

TEST(Adam, DefaultsFollowPublishedSettings) {
  Tensor w = param(Shape{2}, 1);
  Adam opt({{"w", w}}, AdamConfig{});
  EXPECT_EQ(opt.config().lr, Real(1e-4));
  EXPECT_EQ(opt.config().beta1, Real(0.5));
  EXPECT_EQ(opt.config().beta2, Real(0.999));
  EXPECT_EQ(opt.config().eps, Real(1e-8));
  EXPECT_EQ(opt.steps(), 0u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Tensor w = param(Shape{3, 4}, 2);
  const Tensor before = w.clone();
  Adam opt({{"w", w}}, AdamConfig{});
  for (int i = 0; i < 3; ++i) {
    set_grad(w, 0);
    opt.step();
  }
  EXPECT_TRUE(cgrn::testing::bit_equal(w, before));
}

TEST(Adam, FirstStepMovesBySignOfGradient) {
  for (Real g : {Real(3.0), Real(-0.02), Real(1e-3)}) {
    Tensor w = Tensor::scalar(1);
    w.set_requires_grad(true);
    Adam opt({{"w", w}}, AdamConfig{});
    set_grad(w, g);
    opt.step();
    const double expected = 1.0 - 1e-4 * std::abs(g) / (std::abs(g) + 1e-8) * (g > 0 ? 1 : -1);
    EXPECT_NEAR(w.item(), expected, cgrn::testing::kExact);
    EXPECT_NEAR(std::abs(w.item() - 1.0), 1e-4, 1e-9 + cgrn::testing::kExact);
  }
}

TEST(Adam, MatchesClosedFormRecurrence) {
  Tensor w = Tensor::scalar(0.25);
  w.set_requires_grad(true);
  AdamConfig cfg;
  cfg.lr = Real(0.01);
  Adam opt({{"w", w}}, cfg);
  const std::vector<double> grads{0.3, -1.2, 0.05, 0.7, -0.4};
  double p = 0.25, m = 0, v = 0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    set_grad(w, static_cast<Real>(g));
    opt.step();
    m = 0.5 * m + 0.5 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.5, t));
    const double vh = v / (1 - std::pow(0.999, t));
    p -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(w.item(), p, cgrn::testing::kOracle);
  }
}

TEST(Adam, GradientsAreZeroedAfterStep) {
  Tensor w = param(Shape{5}, 3);
  Adam opt({{"w", w}}, AdamConfig{});
  set_grad(w, 2);
  opt.step();
  for (Real g : w.grad()) EXPECT_EQ(g, 0);
}

TEST(Adam, MissingGradientIsRejectedWithoutSideEffects) {
  Tensor a = param(Shape{2}, 4);
  Tensor b = param(Shape{2}, 5);
  Adam opt({{"a", a}, {"b", b}}, AdamConfig{});
  set_grad(a, 1);
  const Tensor a0 = a.clone();
  try {
    opt.step();
    FAIL();
  } catch (const std::logic_error& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_TRUE(cgrn::testing::bit_equal(a, a0));
  EXPECT_EQ(opt.steps(), 0u);
  for (Real m : opt.slots()[0].m.data()) EXPECT_EQ(m, 0);
}

TEST(Adam, StepCounterIsSharedAcrossSlice) {
  Tensor a = param(Shape{2}, 6);
  Tensor b = param(Shape{3, 3}, 7);
  Adam opt({{"a", a}, {"b", b}}, AdamConfig{});
  ASSERT_EQ(opt.slots().size(), 2u);
  EXPECT_EQ(opt.slots()[1].m.shape(), b.shape());
  EXPECT_EQ(opt.slots()[1].v.shape(), b.shape());
  for (int i = 1; i <= 4; ++i) {
    set_grad(a, 1);
    set_grad(b, -1);
    opt.step();
    EXPECT_EQ(opt.steps(), static_cast<std::uint64_t>(i));
  }
}
