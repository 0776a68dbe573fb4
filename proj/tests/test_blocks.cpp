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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "disco/blocks.hpp"
#include "disco/errors.hpp"
#include "disco/gradcheck.hpp"
#include "disco/ops.hpp"
#include "disco/params.hpp"
#include "oracles.hpp"

using namespace disco;

namespace {

std::vector<ConvSpec> stack(const std::vector<int>& dilations) {
  DenseBlockSpec spec;
  spec.layers = static_cast<int>(dilations.size());
  spec.dilations = dilations;
  return spec.conv_specs();
}

// argmax over the channel dimension at (n, y, x)
int argmax_channel(const Tensor& t, std::int64_t n, std::int64_t y, std::int64_t x) {
  int best = 0;
  for (int d = 1; d < t.dim(1); ++d) {
    if (t.at(n, d, y, x) > t.at(n, best, y, x)) best = d;
  }
  return best;
}

}  // namespace

TEST_CASE("receptive field of single dilated kernels") {
  CHECK(receptive_field(3, 1) == 3);
  CHECK(receptive_field(3, 3) == 7);
  CHECK(receptive_field(3, 6) == 13);
  CHECK(receptive_field(3, 8) == 17);
  for (int d = 1; d < 30; ++d) CHECK(receptive_field(1, d) == 1);
  CHECK(receptive_field(ConvSpec::same(4, 4, 3, 6)) == 13);
}

TEST_CASE("stacked receptive field composition") {
  CHECK(stacked_receptive_field(stack({1, 3, 6, 8})) == 37);
  CHECK(stacked_receptive_field(stack({1, 1, 1, 1})) == 9);
  CHECK(stacked_receptive_field(stack({1})) == 3);
  CHECK(stacked_receptive_field(stack({6})) == 13);
  CHECK(stacked_receptive_field(stack({1, 3, 6, 12, 18, 24})) == 129);
  std::vector<ConvSpec> strided = stack({1, 1});
  strided[1].stride = 2;
  CHECK_THROWS_AS(stacked_receptive_field(strided), ConfigError);
}

TEST_CASE("dense block channel arithmetic") {
  DenseBlockSpec spec;
  spec.in_channels = 16;
  spec.growth = 8;
  spec.layers = 3;
  spec.dilations = {1, 1, 1};
  CHECK(spec.layer_input_channels(3) == 32);
  CHECK(spec.output_channels() == 40);
  for (int g0 = 1; g0 <= 24; g0 += 5) {
    for (int g = 1; g <= 12; g += 3) {
      for (int l = 1; l <= 6; ++l) {
        DenseBlockSpec s{l, g, g0, std::vector<int>(static_cast<std::size_t>(l), 1)};
        const auto specs = s.conv_specs();
        REQUIRE(specs.size() == static_cast<std::size_t>(l));
        for (int i = 1; i <= l; ++i) {
          CHECK(specs[static_cast<std::size_t>(i - 1)].in_channels == g0 + (i - 1) * g);
          CHECK(specs[static_cast<std::size_t>(i - 1)].out_channels == g);
        }
        CHECK(s.output_channels() == g0 + l * g);
      }
    }
  }
  DenseBlockSpec bad = spec;
  bad.dilations = {1, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("dense block forward shape and single-layer equivalence") {
  ParamStore store;
  std::mt19937_64 rng(5);
  DenseBlockSpec spec{3, 8, 16, {1, 3, 6}};
  declare_dense_block(ParamBuilder(store, rng, "blk."), spec);
  Graph g;
  Tensor x = oracle::random_tensor({2, 16, 12, 14}, rng);
  Var y = dense_block(ParamScope(g, store, "blk."), g.constant(x), spec);
  CHECK(y.shape() == Shape{2, 40, 12, 14});
  // The input passes straight through into the first g0 output channels.
  Var head = ops::slice_channels(y, 0, 16);
  CHECK(oracle::max_abs_diff(head.value(), x) == 0.0);

  DenseBlockSpec one{1, 4, 3, {1}};
  ParamStore s1;
  declare_dense_block(ParamBuilder(s1, rng, "b."), one);
  Graph g1;
  Tensor in = oracle::random_tensor({1, 3, 6, 7}, rng);
  Var out = dense_block(ParamScope(g1, s1, "b."), g1.constant(in), one);
  Var manual = ops::concat_channels(
      {g1.constant(in), ParamScope(g1, s1, "b.").sub("layer1").sub("conv").conv(ops::elu(g1.constant(in)),
                                                                                 one.conv_specs()[0])});
  CHECK(oracle::max_abs_diff(out.value(), manual.value()) == 0.0);

  Graph g2;
  CHECK_THROWS_AS(dense_block(ParamScope(g2, store, "blk."), g2.constant(Tensor::zeros({1, 15, 4, 4})), spec),
                  ConfigError);
}

TEST_CASE("correlation: self-match dominates for unit-norm features") {
  std::mt19937_64 rng(21);
  Tensor f = oracle::random_tensor({1, 6, 5, 20}, rng);
  for (std::int64_t y = 0; y < 5; ++y) {
    for (std::int64_t x = 0; x < 20; ++x) {
      double norm = 0;
      for (int c = 0; c < 6; ++c) norm += f.at(0, c, y, x) * f.at(0, c, y, x);
      for (int c = 0; c < 6; ++c) f.at(0, c, y, x) /= static_cast<Real>(std::sqrt(norm));
    }
  }
  Graph g;
  Var v = correlation(g.constant(f), g.constant(f), {8});
  CHECK(v.shape() == Shape{1, 8, 5, 20});
  for (std::int64_t y = 0; y < 5; ++y) {
    for (std::int64_t x = 8; x < 20; ++x) {
      CHECK(v.value().at(0, 0, y, x) == doctest::Approx(1.0 / 6));
      for (int d = 1; d < 8; ++d) CHECK(v.value().at(0, 0, y, x) >= v.value().at(0, d, y, x));
    }
  }
}

TEST_CASE("correlation: shifted right view peaks at the shift") {
  std::mt19937_64 rng(22);
  Tensor left = oracle::random_tensor({1, 8, 6, 24}, rng);
  // right(x) = left(x + 3): left pixel x matches right pixel x - 3.
  Tensor right = Tensor::zeros(left.shape());
  for (int c = 0; c < 8; ++c)
    for (std::int64_t y = 0; y < 6; ++y)
      for (std::int64_t x = 0; x + 3 < 24; ++x) right.at(0, c, y, x) = left.at(0, c, y, x + 3);
  Tensor lf = patch_features(left, 0), rf = patch_features(right, 0);
  Graph g;
  Var v = correlation(g.constant(lf), g.constant(rf), {8});
  for (std::int64_t y = 0; y < 6; ++y)
    for (std::int64_t x = 8; x < 24; ++x) CHECK(argmax_channel(v.value(), 0, y, x) == 3);
}

TEST_CASE("correlation matches the nested-loop oracle on every shape up to 2x8x16x24") {
  std::mt19937_64 rng(23);
  for (std::int64_t n : {1, 2})
    for (std::int64_t c : {1, 3, 8})
      for (std::int64_t h : {1, 5, 16})
        for (std::int64_t w : {1, 7, 24})
          for (int dmax : {1, 4, 8}) {
            Tensor l = oracle::random_tensor({n, c, h, w}, rng);
            Tensor r = oracle::random_tensor({n, c, h, w}, rng);
            Graph g;
            Var v = correlation(g.constant(l), g.constant(r), {dmax});
            CHECK(oracle::max_abs_diff(v.value(), oracle::correlation(l, r, dmax)) <= 1e-10);
          }
  Graph g;
  CHECK_THROWS_AS(correlation(g.constant(Tensor::zeros({1, 2, 4, 4})), g.constant(Tensor::zeros({1, 2, 4, 5})), {2}),
                  ShapeError);
}

TEST_CASE("spp: channel count, constants and a single bright pixel") {
  Graph g;
  Var c = g.constant(Tensor::full({1, 3, 16, 20}, 0.7));
  Var s = spp(c, {8, 16, 32, 64});
  CHECK(s.shape() == Shape{1, 12, 16, 20});
  // Constant input stays constant on every branch (zero padding never wins the max for positive input).
  for (Real v : s.value().data()) CHECK(v == doctest::Approx(0.7));

  Tensor dot = Tensor::zeros({1, 1, 32, 32});
  dot.at(0, 0, 10, 12) = 1;
  Graph g2;
  Var b = spp(g2.constant(dot), {8});
  // The pooled cell covering rows 8..15, cols 8..15 holds the peak. Restoring by 8x
  // samples it at offsets of 1/16 cell from its centre, so the brightest restored
  // pixels sit at the block centre with weight (15/16)^2.
  const double peak = (15.0 / 16) * (15.0 / 16);
  CHECK(b.value().at(0, 0, 12, 12) == doctest::Approx(peak));
  CHECK(b.value().at(0, 0, 11, 11) == doctest::Approx(peak));
  for (Real v : b.value().data()) CHECK(v <= peak + 1e-12);
  // Block edges blend with neighbours, blocks further away stay zero.
  CHECK(b.value().at(0, 0, 8, 12) < 1.0);
  CHECK(b.value().at(0, 0, 8, 12) > 0.0);
  CHECK(b.value().at(0, 0, 28, 28) == 0.0);
  CHECK(b.value().at(0, 0, 0, 0) == 0.0);
}

TEST_CASE("warp_horizontal: zero disparity is the identity and a unit shift moves a ramp") {
  std::mt19937_64 rng(31);
  Tensor src = oracle::random_tensor({2, 3, 5, 9}, rng);
  Graph g;
  Var w0 = warp_horizontal(g.constant(src), g.constant(Tensor::zeros({2, 1, 5, 9})));
  CHECK(oracle::max_abs_diff(w0.value(), src) == 0.0);

  Tensor ramp({1, 1, 3, 10});
  for (std::int64_t y = 0; y < 3; ++y)
    for (std::int64_t x = 0; x < 10; ++x) ramp.at(0, 0, y, x) = static_cast<Real>(x);
  Var w1 = warp_horizontal(g.constant(ramp), g.constant(Tensor::full({1, 1, 3, 10}, 1)));
  for (std::int64_t y = 0; y < 3; ++y)
    for (std::int64_t x = 1; x < 10; ++x) CHECK(w1.value().at(0, 0, y, x) == doctest::Approx(x - 1));
  CHECK(w1.value().at(0, 0, 0, 0) == 0.0);

  Var half = warp_horizontal(g.constant(ramp), g.constant(Tensor::full({1, 1, 3, 10}, 2.25)));
  CHECK(half.value().at(0, 0, 1, 6) == doctest::Approx(3.75));
}

TEST_CASE("warp_horizontal: disparity gradient at non-integer shifts") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(900 + seed);
    Tensor src = oracle::random_tensor({1, 2, 3, 8}, rng);
    Tensor disp({1, 1, 3, 8});
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::uniform_int_distribution<int> k(0, 3);
    for (Real& v : disp.data()) v = static_cast<Real>(k(rng) + u(rng));
    const double err = gradient_max_rel_error(
        [](Graph&, const std::vector<Var>& in) { return warp_horizontal(in[0], in[1]); }, {src, disp}, rng);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("lgcf: identical views make channel zero dominant") {
  const LgcfSpec spec = LgcfSpec::standard(8, 4, 8);
  CHECK(spec.concat_channels() == 8 + (8 + 6 * 4) + 4 * 8);
  CHECK(stacked_receptive_field(spec.dense.conv_specs()) == 129);
  ParamStore store;
  std::mt19937_64 rng(41);
  declare_lgcf(ParamBuilder(store, rng, "lgcf."), spec);
  Tensor f = oracle::random_tensor({1, 8, 16, 32}, rng);
  Graph g;
  Var cost = lgcf(ParamScope(g, store, "lgcf."), g.constant(f), g.constant(f), spec, {8});
  CHECK(cost.shape() == Shape{1, 8, 16, 32});
  // Channel 0 is a mean of squares; every other level is a cross term that is on average smaller.
  double mean0 = 0;
  std::vector<double> mean(8, 0.0);
  for (std::int64_t y = 0; y < 16; ++y)
    for (std::int64_t x = 8; x < 32; ++x)
      for (int d = 0; d < 8; ++d) mean[static_cast<std::size_t>(d)] += cost.value().at(0, d, y, x);
  mean0 = mean[0];
  for (int d = 1; d < 8; ++d) CHECK(mean0 > mean[static_cast<std::size_t>(d)]);
}

TEST_CASE("lgcf starts close to plain correlation of the original features") {
  const LgcfSpec spec = LgcfSpec::standard(8, 4, 8);
  ParamStore store;
  std::mt19937_64 rng(43);
  declare_lgcf(ParamBuilder(store, rng, "lgcf."), spec);
  const Tensor& w = store.get("lgcf.fuse.weight");
  CHECK(w.at(3, 3, 0, 0) > 0.5);
  Tensor l = oracle::random_tensor({1, 8, 16, 32}, rng), r = oracle::random_tensor({1, 8, 16, 32}, rng);
  Graph g;
  const Tensor fused = lgcf(ParamScope(g, store, "lgcf."), g.constant(l), g.constant(r), spec, {6}).value();
  const Tensor plain = correlation(g.constant(l), g.constant(r), {6}).value();
  double num = 0, den = 0;
  for (std::int64_t i = 0; i < plain.size(); ++i) {
    num += (fused[i] - plain[i]) * (fused[i] - plain[i]);
    den += plain[i] * plain[i];
  }
  CHECK(std::sqrt(num / den) < 0.5);
}

TEST_CASE("lgcf and plain correlation produce the same cost-volume shape") {
  const LgcfSpec spec = LgcfSpec::standard(4, 2, 4);
  ParamStore store;
  std::mt19937_64 rng(42);
  declare_lgcf(ParamBuilder(store, rng, "c."), spec);
  Tensor l = oracle::random_tensor({2, 4, 8, 16}, rng), r = oracle::random_tensor({2, 4, 8, 16}, rng);
  Graph g;
  Var a = lgcf(ParamScope(g, store, "c."), g.constant(l), g.constant(r), spec, {5});
  Var b = correlation(g.constant(l), g.constant(r), {5});
  CHECK(a.shape() == b.shape());
}
