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

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/graph.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// Builds the op under test from leaf inputs and returns its output.
using GradCheckFn = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

// Compares analytic gradients of sum(op(inputs) * R), R fixed random, against
// central finite differences for every input element. Returns the max relative error.
double gradient_max_rel_error(const GradCheckFn& fn, const std::vector<Tensor>& inputs, std::mt19937_64& rng,
                              const GradCheckOptions& opts = {});

struct GradCheckRow {
  std::string op;
  int seeds = 0;
  double max_rel_error = 0;
  bool passed = false;
};

// Named finite-difference suites, one per differentiable op.
const std::vector<std::string>& gradcheck_suite_names();
GradCheckRow run_gradcheck_suite(const std::string& op, int seeds, double tolerance, unsigned base_seed = 1234);

}  // namespace disco::inline DISCO_ABI
