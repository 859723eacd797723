// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Dynamic reverse-mode tape. A Graph records every op of one forward pass in
// execution order; backward() walks it in reverse exactly once.

#pragma once

#include <functional>
#include <vector>

#include "linvoc/tensor.hpp"

namespace linvoc::ad {

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  int id = -1;

  const Tensor<T>& value() const { return graph->value(id); }
  const Shape& shape() const { return value().shape(); }
  std::int64_t size() const { return value().size(); }
  bool requires_grad() const { return graph->requires_grad(id); }
};

template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Input that never receives gradient.
  Var<T> constant(Tensor<T> value);
  /// Input whose gradient is kept on the node (read it with grad()).
  Var<T> leaf(Tensor<T> value);
  /// Trainable input; after backward() its gradient is added into *sink.
  /// A null sink behaves like leaf().
  Var<T> param(const Tensor<T>& value, Tensor<T>* sink);

  /// Appends an op result. The node requires grad iff any parent does; the
  /// backward function is dropped otherwise.
  Var<T> record(Tensor<T> value, std::vector<int> parents, BackwardFn fn);

  /// Reverse sweep from a scalar node. Interior gradients are reset first, so
  /// several backward passes over one graph (e.g. critic then generator
  /// objective) do not interfere. Sinks are accumulated, never overwritten.
  void backward(const Var<T>& loss);

  const Tensor<T>& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }
  bool has_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).has_grad; }
  /// Gradient of a node after backward(); zeros if it was not reached.
  Tensor<T> grad(const Var<T>& v) const;

  /// Gradient of node `id` during a backward sweep (valid when has_grad).
  const Tensor<T>& node_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).grad; }

  /// Mutable gradient slot used by backward rules; zero-initialised on first
  /// touch. Returns nullptr if the node does not take gradient.
  Tensor<T>* grad_slot(int id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    Tensor<T>* sink = nullptr;
    std::vector<int> parents;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace linvoc::ad
