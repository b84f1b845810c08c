#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn {

/// Append-only tape of executed operations. Operations record themselves into
/// the graph that is active on the calling thread; backward() replays the
/// tape in reverse. A graph must stay on the thread that created it.
class Graph {
 public:
  using BackwardFn = std::function<void()>;

  struct Node {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  /// Makes a graph the recording target for the current thread.
  class Scope {
   public:
    explicit Scope(Graph& graph);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph* previous_;
  };

  /// Suspends recording for the current thread (inference / detached regions).
  class Pause {
   public:
    Pause();
    ~Pause();
    Pause(const Pause&) = delete;
    Pause& operator=(const Pause&) = delete;

   private:
    Graph* previous_;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  static Graph* active();

  /// Returns the active graph if any of `inputs` requires a gradient, else null.
  static Graph* tracking(std::initializer_list<const Tensor*> inputs);
  static Graph* tracking(const std::vector<Tensor>& inputs);

  /// Marks `output` as a non-leaf produced by `op` and appends the node.
  void record(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn backward);

  /// Accumulates dLoss/dT into every requires_grad tensor reachable from
  /// `loss`. Intermediate gradients are reset first, so leaf gradients
  /// accumulate across repeated calls.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

/// Adds `src` into the gradient buffer of `dst` when dst requires a gradient.
void accumulate_grad(const Tensor& dst, std::span<const Real> src);

}  // namespace cgrn
