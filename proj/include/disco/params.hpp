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

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "disco/config.hpp"
#include "disco/graph.hpp"
#include "disco/ops.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// Named parameter tensors keyed by dotted path, e.g. "estim.enc1.dense.layer2.conv.weight".
class ParamStore {
 public:
  void add(const std::string& path, Tensor value);
  bool contains(const std::string& path) const { return params_.count(path) != 0; }
  const Tensor& get(const std::string& path) const;
  Tensor& get_mut(const std::string& path);

  const std::map<std::string, Tensor>& all() const { return params_; }
  std::int64_t scalar_count() const;
  std::size_t size() const { return params_.size(); }

 private:
  std::map<std::string, Tensor> params_;
};

// Declares parameters under a path prefix with seeded fan-in scaled init.
class ParamBuilder {
 public:
  ParamBuilder(ParamStore& store, std::mt19937_64& rng, std::string prefix = "")
      : store_(&store), rng_(&rng), prefix_(std::move(prefix)) {}

  ParamBuilder sub(const std::string& name) const { return {*store_, *rng_, prefix_ + name + "."}; }
  const std::string& prefix() const { return prefix_; }

  // gain * N(0, 2 / fan_in).
  void he_normal(const std::string& name, Shape shape, std::int64_t fan_in, double gain = 1.0);
  void zeros(const std::string& name, Shape shape);

  void conv(const ConvSpec& spec, double gain = 1.0);
  void deconv(const DeconvSpec& spec, double gain = 1.0);

  // Already-declared parameter under this prefix, for init adjustments.
  Tensor& declared(const std::string& name) const;

 private:
  ParamStore* store_;
  std::mt19937_64* rng_;
  std::string prefix_;
};

// Binds parameters of a store into a graph under a path prefix.
class ParamScope {
 public:
  ParamScope(Graph& graph, const ParamStore& store, std::string prefix = "")
      : graph_(&graph), store_(&store), prefix_(std::move(prefix)) {}

  ParamScope sub(const std::string& name) const { return {*graph_, *store_, prefix_ + name + "."}; }
  Var get(const std::string& name) const;
  Graph& graph() const { return *graph_; }
  const std::string& prefix() const { return prefix_; }

  Var conv(Var x, const ConvSpec& spec) const;
  Var deconv(Var x, const DeconvSpec& spec) const;

 private:
  Graph* graph_;
  const ParamStore* store_;
  std::string prefix_;
};

}  // namespace disco::inline DISCO_ABI
