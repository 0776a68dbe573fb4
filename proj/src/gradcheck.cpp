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

#include "disco/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "disco/blocks.hpp"
#include "disco/errors.hpp"
#include "disco/loss.hpp"
#include "disco/ops.hpp"

namespace disco::inline DISCO_ABI {

namespace {

Tensor random_normal(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.data()) v = static_cast<Real>(dist(rng));
  return t;
}

// Values separated by far more than the finite-difference step so the max
// location never flips under perturbation.
Tensor distinct_values(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::vector<std::int64_t> order(static_cast<std::size_t>(t.size()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(0.01 * static_cast<double>(order[static_cast<std::size_t>(i)]) - 1.0);
  return t;
}

int pick(std::mt19937_64& rng, std::initializer_list<int> values) {
  std::uniform_int_distribution<std::size_t> dist(0, values.size() - 1);
  return *(values.begin() + dist(rng));
}

double evaluate(const GradCheckFn& fn, const std::vector<Tensor>& inputs, const Tensor& weights) {
  Graph g;
  g.set_grad_enabled(false);
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.leaf(t, false));
  Var out = fn(g, vars);
  const Tensor& o = out.value();
  double acc = 0;
  for (std::int64_t i = 0; i < o.size(); ++i) acc += static_cast<double>(o[i]) * weights[i];
  return acc;
}

struct Case {
  GradCheckFn fn;
  std::vector<Tensor> inputs;
};

Case make_case(const std::string& op, std::mt19937_64& rng) {
  if (op == "conv2d") {
    ConvSpec spec = ConvSpec::same(pick(rng, {1, 2, 3}), pick(rng, {1, 2, 3}), pick(rng, {1, 3}), pick(rng, {1, 2, 3}),
                                   pick(rng, {1, 2}));
    const int h = pick(rng, {5, 6, 7}), w = pick(rng, {6, 8});
    return {[spec](Graph&, const std::vector<Var>& v) { return ops::conv2d(v[0], v[1], v[2], spec); },
            {random_normal({2, spec.in_channels, h, w}, rng),
             random_normal({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}, rng),
             random_normal({spec.out_channels}, rng)}};
  }
  if (op == "deconv2d") {
    DeconvSpec spec;
    const int variant = pick(rng, {0, 1, 2});
    spec.kernel = variant == 0 ? 2 : (variant == 1 ? 4 : 3);
    spec.pad = variant == 0 ? 0 : 1;
    spec.output_padding = variant == 2 ? 1 : 0;
    spec.in_channels = pick(rng, {1, 2, 3});
    spec.out_channels = pick(rng, {1, 2});
    return {[spec](Graph&, const std::vector<Var>& v) { return ops::deconv2d(v[0], v[1], v[2], spec); },
            {random_normal({2, spec.in_channels, pick(rng, {3, 4}), pick(rng, {3, 5})}, rng),
             random_normal({spec.in_channels, spec.out_channels, spec.kernel, spec.kernel}, rng),
             random_normal({spec.out_channels}, rng)}};
  }
  if (op == "elu") {
    // Keep clear of 0 where the second derivative jumps.
    Tensor x = random_normal({2, 3, 4, 5}, rng, 2.0);
    for (auto& v : x.data()) {
      if (std::abs(v) < Real(1e-3)) v = Real(0.5);
    }
    return {[](Graph&, const std::vector<Var>& v) { return ops::elu(v[0]); }, {x}};
  }
  if (op == "maxpool2d") {
    const int k = pick(rng, {2, 3}), s = pick(rng, {1, 2});
    return {[k, s](Graph&, const std::vector<Var>& v) { return ops::maxpool2d(v[0], k, s); },
            {distinct_values({2, 2, 6, 7}, rng)}};
  }
  if (op == "upsample_bilinear") {
    const int f = pick(rng, {2, 4});
    return {[f](Graph&, const std::vector<Var>& v) { return ops::upsample_bilinear(v[0], f); },
            {random_normal({2, 2, 3, 4}, rng)}};
  }
  if (op == "concat") {
    return {[](Graph&, const std::vector<Var>& v) { return ops::concat_channels({v[0], v[1], v[2]}); },
            {random_normal({2, 1, 3, 4}, rng), random_normal({2, 3, 3, 4}, rng), random_normal({2, 2, 3, 4}, rng)}};
  }
  if (op == "correlation") {
    const int dmax = pick(rng, {1, 3, 5});
    return {[dmax](Graph&, const std::vector<Var>& v) { return correlation(v[0], v[1], CorrelationSpec{dmax}); },
            {random_normal({2, 3, 4, 7}, rng), random_normal({2, 3, 4, 7}, rng)}};
  }
  if (op == "warp_horizontal") {
    // Fractional parts kept inside [0.1, 0.9] so the interpolation cell never changes.
    Tensor disp({2, 1, 4, 7});
    std::uniform_int_distribution<int> whole(-1, 3);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    for (auto& v : disp.data()) v = static_cast<Real>(whole(rng) + frac(rng));
    return {[](Graph&, const std::vector<Var>& v) { return warp_horizontal(v[0], v[1]); },
            {random_normal({2, 3, 4, 7}, rng), disp}};
  }
  if (op == "huber_loss") {
    // Residuals straddle both branches, including points just either side of |t| = 1.
    Tensor target = random_normal({1, 1, 4, 5}, rng);
    Tensor pred = target;
    const double offsets[] = {0.9, 0.999, 1.001, 1.1, -0.9, -0.999, -1.001, -1.1, 0.3, -2.5};
    std::uniform_real_distribution<double> wide(-3.0, 3.0);
    for (std::int64_t i = 0; i < pred.size(); ++i) {
      const double t = i < 10 ? offsets[i] : wide(rng);
      pred[i] = static_cast<Real>(static_cast<double>(target[i]) + t);
    }
    Tensor mask = Tensor::full(target.shape(), Real(1));
    mask[19] = 0;
    return {[target, mask](Graph&, const std::vector<Var>& v) { return huber_loss(v[0], target, mask); }, {pred}};
  }
  if (op == "conv_elu_pool") {
    // Composed graph: conv -> elu -> maxpool -> conv.
    ConvSpec c1 = ConvSpec::same(2, 3, 3, pick(rng, {1, 2}));
    ConvSpec c2 = ConvSpec::same(3, 2, 3);
    return {[c1, c2](Graph&, const std::vector<Var>& v) {
              Var h = ops::elu(ops::conv2d(v[0], v[1], v[2], c1));
              return ops::conv2d(ops::maxpool2d(h, 2, 2), v[3], v[4], c2);
            },
            {random_normal({2, 2, 6, 8}, rng), random_normal({3, 2, 3, 3}, rng), random_normal({3}, rng),
             random_normal({2, 3, 3, 3}, rng), random_normal({2}, rng)}};
  }
  throw UsageError("unknown gradcheck op '" + op + "'");
}

}  // namespace

double gradient_max_rel_error(const GradCheckFn& fn, const std::vector<Tensor>& inputs, std::mt19937_64& rng,
                              const GradCheckOptions& opts) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.leaf(t, true));
  Var out = fn(g, vars);
  Tensor weights = random_normal(out.shape(), rng);
  g.backward(ops::weighted_sum(out, weights));

  double worst = 0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& analytic = g.grad(vars[k]);
    for (std::int64_t i = 0; i < inputs[k].size(); ++i) {
      const Real orig = probe[k][i];
      probe[k][i] = static_cast<Real>(static_cast<double>(orig) + opts.step);
      const double up = evaluate(fn, probe, weights);
      probe[k][i] = static_cast<Real>(static_cast<double>(orig) - opts.step);
      const double down = evaluate(fn, probe, weights);
      probe[k][i] = orig;
      const double numeric = (up - down) / (2 * opts.step);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

const std::vector<std::string>& gradcheck_suite_names() {
  static const std::vector<std::string> names{"conv2d",      "deconv2d",        "elu",        "maxpool2d",
                                              "upsample_bilinear", "concat", "correlation", "warp_horizontal",
                                              "huber_loss",  "conv_elu_pool"};
  return names;
}

GradCheckRow run_gradcheck_suite(const std::string& op, int seeds, double tolerance, unsigned base_seed) {
  const auto& names = gradcheck_suite_names();
  if (std::find(names.begin(), names.end(), op) == names.end()) throw UsageError("unknown gradcheck op '" + op + "'");
  GradCheckRow row;
  row.op = op;
  row.seeds = seeds;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(base_seed + 7919u * static_cast<unsigned>(s));
    Case c = make_case(op, rng);
    row.max_rel_error = std::max(row.max_rel_error, gradient_max_rel_error(c.fn, c.inputs, rng));
  }
  row.passed = row.max_rel_error <= tolerance;
  return row;
}

}  // namespace disco::inline DISCO_ABI
