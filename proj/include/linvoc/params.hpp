// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "linvoc/graph.hpp"

namespace linvoc {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// Ordered, named collection of trainable tensors. Element addresses are
/// stable once added.
template <typename T>
class ParamSet {
 public:
  Parameter<T>& add(const std::string& name, Tensor<T> init) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
    index_[name] = items_.size();
    Shape s = init.shape();
    items_.push_back(Parameter<T>{name, std::move(init), Tensor<T>(std::move(s))});
    return items_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Parameter<T>& at(const std::string& name) { return items_[lookup(name)]; }
  const Parameter<T>& at(const std::string& name) const { return items_[lookup(name)]; }

  std::size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::int64_t total_values() const {
    std::int64_t n = 0;
    for (const auto& p : items_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : items_) p.grad.fill(T(0));
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& p : items_) out.add(p.name, p.value.template cast<U>());
    return out;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return it->second;
  }

  std::deque<Parameter<T>> items_;
  std::map<std::string, std::size_t> index_;
};

/// Places parameters into a graph, once per name. A binder over a mutable
/// set routes gradients into Parameter::grad; over a const set it inserts
/// constants.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(ad::Graph<T>& graph, ParamSet<T>& params) : graph_(graph), mutable_(&params), params_(params) {}
  ParamBinder(ad::Graph<T>& graph, const ParamSet<T>& params) : graph_(graph), params_(params) {}

  ad::Var<T> operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    ad::Var<T> v = mutable_ ? graph_.param(mutable_->at(name).value, &mutable_->at(name).grad)
                            : graph_.constant(params_.at(name).value);
    bound_.emplace(name, v);
    return v;
  }

  ad::Graph<T>& graph() { return graph_; }
  const ParamSet<T>& params() const { return params_; }

 private:
  ad::Graph<T>& graph_;
  ParamSet<T>* mutable_ = nullptr;
  const ParamSet<T>& params_;
  std::map<std::string, ad::Var<T>> bound_;
};

}  // namespace linvoc
