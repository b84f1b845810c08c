#include <gtest/gtest.h>

#include <vector>

#include "cgrn/graph.hpp"
#include "cgrn/tensor.hpp"

using namespace cgrn;

TEST(Shape, NumelIsProductOfExtents) {
  EXPECT_EQ(Shape({2, 3, 4}).numel(), 24u);
  EXPECT_EQ(Shape({7}).numel(), 7u);
  EXPECT_EQ(Shape({2, 3, 4}).str(), "[2x3x4]");
}

TEST(Shape, RejectsZeroExtent) { EXPECT_THROW(Shape({2, 0, 3}), ShapeError); }

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<Real>{1, 2, 3}), ShapeError);
  Tensor t(Shape{2, 3}, std::vector<Real>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), t.shape().numel());
}

TEST(Tensor, HandlesAliasStorage) {
  Tensor a = Tensor::full(Shape{3}, 1);
  Tensor b = a;
  b.data()[0] = 5;
  EXPECT_EQ(a.data()[0], 5);
  EXPECT_TRUE(a.same_storage(b));
}

TEST(Tensor, CloneAndDetachAreIndependent) {
  Tensor a = Tensor::from(Shape{2}, {1, 2});
  a.set_requires_grad(true);
  Tensor c = a.clone();
  Tensor d = a.detach();
  c.data()[0] = 9;
  d.data()[1] = 9;
  EXPECT_EQ(a.data()[0], 1);
  EXPECT_EQ(a.data()[1], 2);
  EXPECT_TRUE(c.requires_grad());
  EXPECT_FALSE(d.requires_grad());
}

TEST(Tensor, GradientBufferMatchesDataShape) {
  Tensor t(Shape{2, 5}, true);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.ensure_grad().size(), t.numel());
  EXPECT_THROW(Tensor(Shape{2}).grad(), std::logic_error);
}

TEST(Tensor, NonTrackedTensorNeverAccumulates) {
  Tensor t(Shape{4});
  const std::vector<Real> g{1, 2, 3, 4};
  accumulate_grad(t, g);
  EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, ClearingRequiresGradDropsBuffer) {
  Tensor t(Shape{3}, true);
  t.ensure_grad()[0] = 1;
  t.set_requires_grad(false);
  EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, ItemNeedsSingleElement) {
  EXPECT_EQ(Tensor::scalar(3).item(), 3);
  EXPECT_THROW(Tensor(Shape{2}).item(), ShapeError);
}

TEST(Tensor, UndefinedHandleThrows) {
  Tensor t;
  EXPECT_FALSE(t.defined());
  EXPECT_THROW(t.shape(), std::logic_error);
}
