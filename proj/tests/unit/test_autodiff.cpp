#include <gtest/gtest.h>

#include <cctype>
#include <map>
#include <set>
#include <string>

#include "cgrn/graph.hpp"
#include "cgrn/ops.hpp"
#include "cgrn/reference/gradcheck.hpp"
#include "test_support.hpp"

using namespace cgrn;
using cgrn::testing::kExact;
using cgrn::testing::random_tensor;

namespace {

const std::vector<reference::GradCase>& cases() {
  static const std::vector<reference::GradCase> all = reference::standard_cases(11);
  return all;
}

std::string case_name(const ::testing::TestParamInfo<std::size_t>& info) {
  const auto& c = cases()[info.param];
  std::string name = c.op + "_" + c.variant + "_" + std::to_string(info.param);
  for (char& ch : name) {
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  }
  return name;
}

std::vector<std::size_t> case_indices() {
  std::vector<std::size_t> idx(cases().size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace

class GradCheck : public ::testing::TestWithParam<std::size_t> {};

TEST_P(GradCheck, MatchesCentralDifferences) {
  const auto r = reference::gradcheck(cases()[GetParam()]);
  EXPECT_TRUE(r.passed) << r.op << " " << r.variant << ": " << r.detail;
  EXPECT_LE(r.max_rel_error, reference::kGradTolerance);
}

INSTANTIATE_TEST_SUITE_P(StandardCases, GradCheck, ::testing::ValuesIn(case_indices()), case_name);

TEST(GradCheckCoverage, EveryOperationHasThreeShapes) {
  std::map<std::string, std::set<std::string>> variants;
  for (const auto& c : cases()) variants[c.op].insert(c.variant);
  const std::vector<std::string> required{
      "conv2d", "deconv2d", "maxpool2d", "avgpool2d", "batchnorm2d", "relu",    "sigmoid",    "linear",
      "concat", "reshape",  "flatten",   "repeat_batch", "slice_batch", "embedding", "add", "sub",
      "mul",    "scale",    "sum",       "mean",      "weighted_sum", "softmax_xent", "l1_loss", "l2_loss",
      "bce_with_logits", "loss_d", "loss_pixel"};
  for (const auto& op : required) {
    ASSERT_TRUE(variants.contains(op)) << op;
    EXPECT_GE(variants[op].size(), 3u) << op;
  }
  for (const auto& c : cases()) {
    std::size_t n = 0;
    for (const auto& t : c.inputs) n += t.numel();
    EXPECT_LE(n, 1000u) << c.op << " " << c.variant;
  }
}

TEST(GradCheckCoverage, RejectsWrongBackwardRule) {
  const auto r = reference::gradcheck(reference::corrupted_case(3));
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 0.1);
}

TEST(Backward, SumGivesOnes) {
  Tensor x = random_tensor(Shape{2, 3, 4}, 1, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  g.backward(ops::sum(x));
  for (Real v : x.grad()) EXPECT_EQ(v, 1);
}

TEST(Backward, SquareGivesTwiceInput) {
  Tensor x = random_tensor(Shape{5, 7}, 2, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  g.backward(ops::sum(ops::mul(x, x)));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(x.grad()[i], 2 * x.data()[i]);
}

TEST(Backward, AccumulatesAcrossPaths) {
  Tensor x = random_tensor(Shape{4}, 3, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  Tensor y = ops::add(ops::scale(x, 3), ops::scale(x, 4));
  g.backward(ops::sum(y));
  for (Real v : x.grad()) EXPECT_EQ(v, 7);
}

TEST(Backward, SecondPassAddsTheSameGradientAgain) {
  Tensor x = random_tensor(Shape{2, 2, 5, 5}, 4, -1, 1, true);
  Tensor w = random_tensor(Shape{3, 2, 3, 3}, 5, -1, 1, true);
  Tensor b = random_tensor(Shape{3}, 6, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  Tensor loss = ops::mean(ops::mul(ops::relu(ops::conv2d(x, w, b, 1, 1)), ops::conv2d(x, w, b, 1, 1)));
  g.backward(loss);
  const std::vector<Real> gx(x.grad().begin(), x.grad().end());
  const std::vector<Real> gw(w.grad().begin(), w.grad().end());
  const std::vector<Real> gb(b.grad().begin(), b.grad().end());
  g.backward(loss);
  for (std::size_t i = 0; i < gx.size(); ++i) EXPECT_NEAR(x.grad()[i], 2 * gx[i], kExact);
  for (std::size_t i = 0; i < gw.size(); ++i) EXPECT_NEAR(w.grad()[i], 2 * gw[i], kExact);
  for (std::size_t i = 0; i < gb.size(); ++i) EXPECT_NEAR(b.grad()[i], 2 * gb[i], kExact);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tensor x = random_tensor(Shape{3}, 7, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  Tensor y = ops::scale(x, 2);
  EXPECT_THROW(g.backward(y), ShapeError);
}

TEST(Backward, RejectsUntrackedLoss) {
  Graph g;
  Graph::Scope scope(g);
  Tensor y = ops::sum(Tensor::full(Shape{3}, 1));
  EXPECT_THROW(g.backward(y), std::logic_error);
}

TEST(Backward, FrozenInputGetsNoGradient) {
  Tensor x = random_tensor(Shape{3}, 8, -1, 1, true);
  Tensor c = random_tensor(Shape{3}, 9);
  Graph g;
  Graph::Scope scope(g);
  g.backward(ops::sum(ops::mul(x, c)));
  EXPECT_FALSE(c.has_grad());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(x.grad()[i], c.data()[i]);
}

TEST(Graph, RecordsInExecutionOrderAndReplaysInReverse) {
  Tensor x = random_tensor(Shape{2}, 10, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  Tensor a = ops::scale(x, 2);
  Tensor b = ops::relu(a);
  Tensor c = ops::sum(b);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.nodes()[0].op, "scale");
  EXPECT_EQ(g.nodes()[1].op, "relu");
  EXPECT_EQ(g.nodes()[2].op, "sum");

  std::vector<int> order;
  Graph h;
  Graph::Scope inner(h);
  Tensor y = Tensor::scalar(0);
  Tensor z = Tensor::scalar(0);
  h.record("first", {x}, y, [&] { order.push_back(1); });
  h.record("second", {y}, z, [&] { order.push_back(2); });
  h.backward(z);
  EXPECT_EQ(order, (std::vector<int>{2, 1}));
}

TEST(Graph, PauseStopsRecording) {
  Tensor x = random_tensor(Shape{2}, 12, -1, 1, true);
  Graph g;
  Graph::Scope scope(g);
  {
    Graph::Pause pause;
    Tensor y = ops::scale(x, 2);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_EQ(g.size(), 0u);
}

TEST(Determinism, IdenticalInputsGiveBitIdenticalGradients) {
  auto run = [] {
    Tensor x = random_tensor(Shape{2, 3, 8, 8}, 13, -1, 1, true);
    Tensor w = random_tensor(Shape{4, 3, 3, 3}, 14, -1, 1, true);
    Graph g;
    Graph::Scope scope(g);
    Tensor y = ops::maxpool2d(ops::relu(ops::conv2d(x, w, Tensor(), 1, 1)), 2, 2);
    Tensor loss = ops::mean(ops::mul(y, y));
    g.backward(loss);
    return std::make_pair(loss.item(), std::vector<Real>(w.grad().begin(), w.grad().end()));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}
