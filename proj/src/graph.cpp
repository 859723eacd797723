// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/graph.hpp"

#include <stdexcept>

namespace linvoc::ad {

template <typename T>
Var<T> Graph<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::param(const Tensor<T>& value, Tensor<T>* sink) {
  if (sink && sink->shape() != value.shape()) {
    throw std::invalid_argument("gradient sink shape " + shape_str(sink->shape()) +
                                " does not match parameter " + shape_str(value.shape()));
  }
  Node n;
  n.value = value;
  n.requires_grad = true;
  n.sink = sink;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::record(Tensor<T> value, std::vector<int> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) {
    if (p < 0 || p >= static_cast<int>(nodes_.size())) throw std::out_of_range("bad parent id");
    n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(p)].requires_grad;
  }
  if (n.requires_grad) {
    n.parents = std::move(parents);
    n.backward = std::move(fn);
  }
  return push(std::move(n));
}

template <typename T>
Tensor<T>* Graph<T>::grad_slot(int id) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size()) {
      n.grad = Tensor<T>(n.value.shape());
    } else {
      n.grad.fill(T(0));
    }
    n.has_grad = true;
  }
  return &n.grad;
}

template <typename T>
Tensor<T> Graph<T>::grad(const Var<T>& v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  if (!n.has_grad) return Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
void Graph<T>::backward(const Var<T>& loss) {
  if (loss.graph != this) throw std::invalid_argument("loss belongs to another graph");
  if (value(loss.id).size() != 1) {
    throw std::invalid_argument("backward needs a scalar loss, got shape " +
                                shape_str(value(loss.id).shape()));
  }
  for (int i = 0; i <= loss.id; ++i) nodes_[static_cast<std::size_t>(i)].has_grad = false;
  Tensor<T>* seed = grad_slot(loss.id);
  if (!seed) return;  // loss does not depend on anything trainable
  (*seed)[0] = T(1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, i);
  }
  for (int i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.sink && n.has_grad) {
      T* dst = n.sink->data();
      const T* src = n.grad.data();
      for (std::int64_t k = 0; k < n.grad.size(); ++k) dst[k] += src[k];
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace linvoc::ad
