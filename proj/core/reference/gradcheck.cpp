#include "cgrn/reference/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cgrn/graph.hpp"
#include "cgrn/losses.hpp"
#include "cgrn/ops.hpp"

namespace cgrn::reference {

namespace {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  Tensor tensor(Shape s, double lo = -1, double hi = 1) {
    Tensor t(std::move(s));
    for (Real& v : t.data()) v = static_cast<Real>(uniform(lo, hi));
    t.set_requires_grad(true);
    return t;
  }

  // Magnitudes in [0.05, 1] with random sign: no kink within a finite-difference step.
  Tensor away_from_zero(Shape s) {
    Tensor t = tensor(std::move(s), 0.05, 1);
    for (Real& v : t.data()) v = uniform(0, 1) < 0.5 ? -v : v;
    return t;
  }

  // Distinct values spaced at least 0.01 apart, in random order.
  Tensor distinct(Shape s) {
    Tensor t(std::move(s));
    std::vector<std::size_t> order(t.numel());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_() % i]);
    for (std::size_t i = 0; i < order.size(); ++i) {
      t.data()[order[i]] = static_cast<Real>(0.02 * static_cast<double>(i) + uniform(0, 0.005) - 1.0);
    }
    t.set_requires_grad(true);
    return t;
  }

  std::uint64_t next() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double project(const Tensor& y, const Tensor& r) {
  double s = 0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += static_cast<double>(y.data()[i]) * r.data()[i];
  return s;
}

}  // namespace

GradCheckResult gradcheck(const GradCase& c, double h, double tol, std::uint64_t seed) {
  GradCheckResult res;
  res.op = c.op;
  res.variant = c.variant;
  Gen gen(seed);
  std::vector<Tensor> inputs = c.inputs;
  for (Tensor& t : inputs) t.drop_grad();

  Tensor r;
  std::vector<std::vector<double>> analytic;
  {
    Graph graph;
    Graph::Scope scope(graph);
    const Tensor y = c.fn(inputs);
    r = gen.tensor(y.shape());
    r.set_requires_grad(false);
    const Tensor loss = ops::sum(ops::mul(y, r));
    graph.backward(loss);
    for (const Tensor& t : inputs) {
      std::vector<double> g(t.numel(), 0.0);
      if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), g.begin());
      analytic.push_back(std::move(g));
    }
  }

  Graph::Pause pause;
  std::ostringstream detail;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor t = inputs[k];
    std::vector<double> numeric(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const Real saved = t.data()[i];
      t.data()[i] = static_cast<Real>(saved + h);
      const double up = project(c.fn(inputs), r);
      t.data()[i] = static_cast<Real>(saved - h);
      const double down = project(c.fn(inputs), r);
      t.data()[i] = saved;
      numeric[i] = (up - down) / (2 * h);
    }
    std::vector<double> diff(numeric.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = analytic[k][i] - numeric[i];
    const double scale = std::max({inf_norm(analytic[k]), inf_norm(numeric), 1e-12});
    const double err = inf_norm(diff) / scale;
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      detail.str("");
      detail << "input " << k << " " << t.shape().str() << " rel err " << err;
    }
  }
  for (Tensor& t : inputs) t.drop_grad();
  res.passed = res.max_rel_error <= tol;
  res.detail = detail.str();
  return res;
}

std::vector<GradCase> standard_cases(std::uint64_t seed) {
  Gen g(seed);
  std::vector<GradCase> cases;
  auto add = [&](std::string op, std::string variant, std::vector<Tensor> in,
                 std::function<Tensor(const std::vector<Tensor>&)> fn) {
    cases.push_back({std::move(op), std::move(variant), std::move(in), std::move(fn)});
  };

  struct ConvV {
    std::size_t n, cin, h, cout, k, s, p;
  };
  for (const ConvV v : {ConvV{2, 3, 5, 4, 3, 1, 1}, ConvV{1, 2, 8, 3, 5, 2, 2}, ConvV{2, 2, 4, 2, 2, 1, 0}}) {
    std::ostringstream os;
    os << "x[" << v.n << "," << v.cin << "," << v.h << "," << v.h << "] k" << v.k << " s" << v.s << " p" << v.p;
    add("conv2d", os.str(), {g.tensor({v.n, v.cin, v.h, v.h}), g.tensor({v.cout, v.cin, v.k, v.k}), g.tensor({v.cout})},
        [v](const std::vector<Tensor>& t) { return ops::conv2d(t[0], t[1], t[2], v.s, v.p); });
  }
  for (const ConvV v : {ConvV{2, 3, 2, 2, 5, 2, 0}, ConvV{1, 2, 4, 3, 5, 1, 0}, ConvV{2, 2, 3, 2, 3, 2, 0}}) {
    std::ostringstream os;
    os << "x[" << v.n << "," << v.cin << "," << v.h << "," << v.h << "] k" << v.k << " s" << v.s;
    add("deconv2d", os.str(), {g.tensor({v.n, v.cin, v.h, v.h}), g.tensor({v.cin, v.cout, v.k, v.k}), g.tensor({v.cout})},
        [v](const std::vector<Tensor>& t) { return ops::deconv2d(t[0], t[1], t[2], v.s); });
  }
  struct PoolV {
    std::size_t n, c, h, k, s;
  };
  for (const PoolV v : {PoolV{2, 2, 4, 2, 2}, PoolV{1, 3, 5, 3, 1}, PoolV{2, 1, 8, 4, 4}}) {
    std::ostringstream os;
    os << "x[" << v.n << "," << v.c << "," << v.h << "," << v.h << "] k" << v.k << " s" << v.s;
    add("maxpool2d", os.str(), {g.distinct({v.n, v.c, v.h, v.h})},
        [v](const std::vector<Tensor>& t) { return ops::maxpool2d(t[0], v.k, v.s); });
    add("avgpool2d", os.str(), {g.tensor({v.n, v.c, v.h, v.h})},
        [v](const std::vector<Tensor>& t) { return ops::avgpool2d(t[0], v.k, v.s); });
  }
  struct BnV {
    std::size_t n, c, h, groups;
    ops::Mode mode;
    const char* name;
  };
  for (const BnV v : {BnV{2, 3, 4, 1, ops::Mode::Train, "train"}, BnV{4, 2, 3, 2, ops::Mode::Train, "train groups=2"},
                      BnV{3, 2, 2, 1, ops::Mode::Eval, "eval"}, BnV{4, 3, 1, 1, ops::Mode::Train, "train 1x1"}}) {
    auto state = std::make_shared<ops::BatchNormState>(ops::BatchNormState::create(v.c));
    for (Real& x : state->running_mean.data()) x = static_cast<Real>(g.uniform(-0.5, 0.5));
    for (Real& x : state->running_var.data()) x = static_cast<Real>(g.uniform(0.5, 2));
    std::ostringstream os;
    os << "x[" << v.n << "," << v.c << "," << v.h << "," << v.h << "] " << v.name;
    add("batchnorm2d", os.str(), {g.tensor({v.n, v.c, v.h, v.h}), g.tensor({v.c}, 0.5, 1.5), g.tensor({v.c})},
        [v, state](const std::vector<Tensor>& t) { return ops::batchnorm2d(t[0], t[1], t[2], *state, v.mode, v.groups); });
  }
  for (const Shape& s : {Shape{7}, Shape{2, 3, 4}, Shape{2, 2, 3, 3}}) {
    add("relu", s.str(), {g.away_from_zero(s)}, [](const std::vector<Tensor>& t) { return ops::relu(t[0]); });
    add("sigmoid", s.str(), {g.tensor(s, -4, 4)}, [](const std::vector<Tensor>& t) { return ops::sigmoid(t[0]); });
    add("scale", s.str(), {g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::scale(t[0], Real(-1.7)); });
    add("sum", s.str(), {g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::sum(t[0]); });
    add("mean", s.str(), {g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::mean(t[0]); });
    add("add", s.str(), {g.tensor(s), g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::add(t[0], t[1]); });
    add("sub", s.str(), {g.tensor(s), g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::sub(t[0], t[1]); });
    add("mul", s.str(), {g.tensor(s), g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::mul(t[0], t[1]); });
    add("l2_loss", s.str(), {g.tensor(s), g.tensor(s)},
        [](const std::vector<Tensor>& t) { return ops::l2_loss(t[0], t[1]); });
    Tensor a = g.tensor(s);
    Tensor b = g.away_from_zero(s);
    for (std::size_t i = 0; i < b.numel(); ++i) b.data()[i] = a.data()[i] + b.data()[i];
    add("l1_loss", s.str(), {a, b}, [](const std::vector<Tensor>& t) { return ops::l1_loss(t[0], t[1]); });
  }
  for (const auto& [n, i, o] : {std::tuple{1, 3, 2}, std::tuple{4, 5, 3}, std::tuple{2, 8, 1}}) {
    const auto un = static_cast<std::size_t>(n), ui = static_cast<std::size_t>(i), uo = static_cast<std::size_t>(o);
    std::ostringstream os;
    os << "x[" << n << "," << i << "] W[" << i << "," << o << "]";
    add("linear", os.str(), {g.tensor({un, ui}), g.tensor({ui, uo}), g.tensor({uo})},
        [](const std::vector<Tensor>& t) { return ops::linear(t[0], t[1], t[2]); });
  }
  add("concat", "axis 1, three inputs", {g.tensor({2, 1, 2, 2}), g.tensor({2, 3, 2, 2}), g.tensor({2, 2, 2, 2})},
      [](const std::vector<Tensor>& t) { return ops::concat(t, 1); });
  add("concat", "axis 0", {g.tensor({1, 2, 3}), g.tensor({2, 2, 3})},
      [](const std::vector<Tensor>& t) { return ops::concat(t, 0); });
  add("concat", "axis 2", {g.tensor({2, 2, 1}), g.tensor({2, 2, 3})},
      [](const std::vector<Tensor>& t) { return ops::concat(t, 2); });
  for (const auto& [from, to] : {std::pair{Shape{2, 6}, Shape{3, 4}}, std::pair{Shape{2, 3, 2, 2}, Shape{2, 12, 1, 1}},
                                 std::pair{Shape{5}, Shape{5, 1}}}) {
    add("reshape", from.str() + "->" + to.str(), {g.tensor(from)},
        [to = to](const std::vector<Tensor>& t) { return ops::reshape(t[0], to); });
  }
  for (const Shape& s : {Shape{2, 3, 2, 2}, Shape{1, 4, 1, 1}, Shape{3, 2, 3}}) {
    add("flatten", s.str(), {g.tensor(s)}, [](const std::vector<Tensor>& t) { return ops::flatten(t[0]); });
    add("repeat_batch", s.str() + " x3", {g.tensor(s)},
        [](const std::vector<Tensor>& t) { return ops::repeat_batch(t[0], 3); });
  }
  for (const auto& [s, begin, count] : {std::tuple{Shape{4, 2}, 1, 2}, std::tuple{Shape{3, 2, 2, 2}, 0, 1},
                                        std::tuple{Shape{5, 3}, 4, 1}}) {
    add("slice_batch", s.str(), {g.tensor(s)}, [b = begin, c = count](const std::vector<Tensor>& t) {
      return ops::slice_batch(t[0], static_cast<std::size_t>(b), static_cast<std::size_t>(c));
    });
  }
  for (const auto& [rows, dim, idx] :
       {std::tuple{4, 3, std::vector<std::size_t>{2, 0, 2, 3}}, std::tuple{1, 5, std::vector<std::size_t>{0, 0}},
        std::tuple{3, 2, std::vector<std::size_t>{1}}}) {
    add("embedding", std::to_string(rows) + "x" + std::to_string(dim),
        {g.tensor({static_cast<std::size_t>(rows), static_cast<std::size_t>(dim)})},
        [idx = idx](const std::vector<Tensor>& t) { return ops::embedding(t[0], idx); });
  }
  for (std::size_t n : {1, 2, 4}) {
    std::vector<Tensor> in;
    std::vector<Real> coeffs;
    for (std::size_t i = 0; i < n; ++i) {
      in.push_back(g.tensor({1}));
      coeffs.push_back(static_cast<Real>(g.uniform(-3, 3)));
    }
    add("weighted_sum", std::to_string(n) + " terms", in,
        [coeffs](const std::vector<Tensor>& t) { return ops::weighted_sum(t, coeffs); });
  }
  for (const auto& [n, l] : {std::pair{1, 2}, std::pair{3, 5}, std::pair{4, 36}}) {
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(g.next() % static_cast<std::uint64_t>(l)));
    add("softmax_xent", "[" + std::to_string(n) + "," + std::to_string(l) + "]",
        {g.tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(l)}, -3, 3)},
        [labels](const std::vector<Tensor>& t) { return ops::softmax_xent(t[0], labels); });
  }
  for (const auto& [s, target] : {std::pair{Shape{4, 1}, 1.0}, std::pair{Shape{3, 1}, 0.0}, std::pair{Shape{2, 3}, 0.3}}) {
    add("bce_with_logits", s.str() + " y=" + std::to_string(target).substr(0, 3), {g.tensor(s, -4, 4)},
        [target = target](const std::vector<Tensor>& t) { return ops::bce_with_logits(t[0], static_cast<Real>(target)); });
  }
  for (const Shape& s : {Shape{2, 1}, Shape{8, 1}, Shape{3, 1}}) {
    add("loss_d", s.str(), {g.tensor(s, -3, 3), g.tensor(s, -3, 3)},
        [](const std::vector<Tensor>& t) { return loss_d(t[0], t[1]); });
  }
  for (std::size_t m : {1, 2, 3}) {
    std::vector<Tensor> in;
    for (std::size_t i = 0; i < 2 * m; ++i) in.push_back(g.tensor({2, 3, 2, 2}));
    for (std::size_t i = 0; i < m; ++i) {
      Tensor off = g.away_from_zero({2, 3, 2, 2});
      for (std::size_t j = 0; j < off.numel(); ++j) in[m + i].data()[j] = in[i].data()[j] + off.data()[j];
    }
    add("loss_pixel", "m=" + std::to_string(m), in, [m](const std::vector<Tensor>& t) {
      return loss_pixel(std::vector<Tensor>(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(m)),
                        std::vector<Tensor>(t.begin() + static_cast<std::ptrdiff_t>(m), t.end()));
    });
  }
  return cases;
}

GradCase corrupted_case(std::uint64_t seed) {
  Gen g(seed);
  GradCase c;
  c.op = "faulty_scale";
  c.variant = "[3,4]";
  c.inputs = {g.tensor({3, 4})};
  c.fn = [](const std::vector<Tensor>& t) {
    const Tensor& x = t[0];
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = 3 * x.data()[i];
    if (Graph* graph = Graph::tracking({&x})) {
      graph->record("faulty_scale", {x}, out, [x, out]() {
        auto dx = x.ensure_grad();
        const auto dy = out.grad();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += 6 * dy[i];  // should be 3
      });
    }
    return out;
  };
  return c;
}

}  // namespace cgrn::reference
