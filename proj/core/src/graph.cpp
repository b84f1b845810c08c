#include "cgrn/graph.hpp"

#include <unordered_set>

namespace cgrn {

namespace {
thread_local Graph* g_active = nullptr;
}

Graph::Scope::Scope(Graph& graph) : previous_(g_active) { g_active = &graph; }
Graph::Scope::~Scope() { g_active = previous_; }

Graph::Pause::Pause() : previous_(g_active) { g_active = nullptr; }
Graph::Pause::~Pause() { g_active = previous_; }

Graph* Graph::active() { return g_active; }

Graph* Graph::tracking(std::initializer_list<const Tensor*> inputs) {
  if (!g_active) return nullptr;
  for (const Tensor* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return g_active;
  }
  return nullptr;
}

Graph* Graph::tracking(const std::vector<Tensor>& inputs) {
  if (!g_active) return nullptr;
  for (const Tensor& t : inputs) {
    if (t.defined() && t.requires_grad()) return g_active;
  }
  return nullptr;
}

void Graph::record(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn backward) {
  output.impl().requires_grad = true;
  output.impl().is_leaf = false;
  nodes_.push_back(Node{std::move(op), std::move(inputs), output, std::move(backward)});
}

void Graph::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward() requires a scalar loss, got shape " + loss.shape().str());
  }
  if (!loss.requires_grad()) {
    throw std::logic_error("backward(): loss does not depend on any tracked tensor");
  }

  // Restrict the replay to nodes that lie on a path to the loss.
  std::vector<bool> live(nodes_.size(), false);
  std::unordered_set<const TensorImpl*> needed{&loss.impl()};
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const Node& node = nodes_[i];
    if (!needed.contains(&node.output.impl())) continue;
    live[i] = true;
    for (const Tensor& in : node.inputs) {
      if (in.defined() && in.requires_grad()) needed.insert(&in.impl());
    }
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!live[i]) continue;
    Tensor out = nodes_[i].output;
    out.ensure_grad();
    out.zero_grad();
  }

  Tensor seed = loss;
  seed.ensure_grad()[0] += Real{1};

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (live[i]) nodes_[i].backward();
  }
}

void accumulate_grad(const Tensor& dst, std::span<const Real> src) {
  if (!dst.defined() || !dst.requires_grad()) return;
  auto g = dst.ensure_grad();
  if (g.size() != src.size()) {
    throw ShapeError("gradient size mismatch for tensor of shape " + dst.shape().str());
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
}

}  // namespace cgrn
