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

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

class Graph;

// Handle to a node recorded in a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr && id_ >= 0; }
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::int64_t dim(std::size_t i) const { return value().dim(i); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Tape of recorded operations. Nodes are appended in execution order, which is
// a topological order, so backward() is a single reverse sweep.
// Single writer: never run forward/backward on one graph from two threads.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;
  using Observer = std::function<void(const std::string& op, const Tensor& value)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad = true);

  // Named trainable leaf. Requesting the same name twice returns the same node,
  // which is how weight sharing (Siamese branches) accumulates gradients.
  Var param(const std::string& name, const Tensor& value);

  // Records an op result. `backward` receives the gradient w.r.t. `value` and
  // must accumulate into the parents through grad_buffer().
  Var record(std::string op, Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  void backward(Var loss);

  const Tensor& value(Var v) const { return node(v).value; }
  const std::string& op(Var v) const { return node(v).op; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }

  // Gradient after backward(). Zero tensor for leaves the loss does not reach.
  const Tensor& grad(Var v) const;
  // Mutable gradient accumulator, zero-initialized on first use.
  Tensor& grad_buffer(int id);

  const std::map<std::string, int>& params() const { return params_; }
  Tensor param_grad(const std::string& name) const;

  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  bool grad_enabled() const { return grad_enabled_; }
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Var push(Node node);

  std::deque<Node> nodes_;
  std::map<std::string, int> params_;
  Observer observer_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

}  // namespace disco::inline DISCO_ABI
