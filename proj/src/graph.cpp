/* Copyright 2026 The DISCO Stereo Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "disco/graph.hpp"

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

const Tensor& Var::value() const { return graph_->value(*this); }

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || &v.graph() != this || v.id() >= static_cast<int>(nodes_.size())) {
    throw UsageError("variable does not belong to this graph");
  }
  return nodes_[static_cast<std::size_t>(v.id())];
}

Var Graph::push(Node n) {
  if (observer_) observer_(n.op, n.value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  return push(std::move(n));
}

Var Graph::param(const std::string& name, const Tensor& value) {
  if (auto it = params_.find(name); it != params_.end()) return Var(this, it->second);
  Node n;
  n.op = "param:" + name;
  n.value = value;
  n.requires_grad = grad_enabled_;
  Var v = push(std::move(n));
  params_.emplace(name, v.id());
  return v;
}

Var Graph::record(std::string op, Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  value.check_finite(op);
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& p : parents) {
      if (&p.graph() != this) throw UsageError("op '" + n.op + "' mixes variables from different graphs");
      n.parents.push_back(p.id());
      n.requires_grad = n.requires_grad || requires_grad(p);
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Tensor& Graph::grad_buffer(int id) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) {
    throw UsageError("no gradient for node '" + n.op + "'; run backward() on a loss that depends on it");
  }
  return n.grad;
}

Tensor Graph::param_grad(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("unknown parameter '" + name + "'");
  return grad(Var(const_cast<Graph*>(this), it->second));
}

void Graph::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + shape_str(root.value.shape()));
  }
  if (backward_done_) throw UsageError("backward() may run only once per graph");
  backward_done_ = true;
  grad_buffer(loss.id()).fill(Real(1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
  // Every trainable leaf ends with a gradient, zero when unreachable.
  for (auto& n : nodes_) {
    if (n.requires_grad && n.grad.empty()) n.grad = Tensor(n.value.shape());
  }
}

}  // namespace disco::inline DISCO_ABI
