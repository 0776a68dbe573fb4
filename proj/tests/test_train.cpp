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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "disco/checkpoint.hpp"
#include "disco/errors.hpp"
#include "disco/gradcheck.hpp"
#include "disco/loss.hpp"
#include "disco/metrics.hpp"
#include "disco/ops.hpp"
#include "disco/train.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace disco;
namespace fs = std::filesystem;

namespace {

bool bit_identical(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.ptr(), b.ptr(), sizeof(Real) * static_cast<std::size_t>(a.size())) == 0;
}

Tensor constant_map(Real v, Shape s = {1, 1, 4, 6}) { return Tensor(std::move(s), v); }

RdsConfig tiny_rds() {
  RdsConfig rc;
  rc.height = 32;
  rc.width = 64;
  rc.max_disparity = 12;
  return rc;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.base_width = 4;
  c.half_res_blocks = 1;
  c.quarter_res_blocks = 1;
  c.growth = 4;
  c.max_disparity = 8;
  c.encoder_widths = {8, 8, 8};
  c.encoder_dilations = {{1, 3}, {1, 3}, {1, 3}};
  c.bottleneck_layers = 1;
  c.decoder_widths = {8, 8, 8, 4, 4};
  c.lgcf_dilations = {1, 3};
  c.lgcf_growth = 2;
  c.refine_widths = {4, 4, 4};
  return c;
}

}  // namespace

TEST_CASE("huber loss: closed-form values") {
  const Tensor mask = constant_map(1);
  CHECK(huber_value(constant_map(3), constant_map(3), mask) == 0.0);
  CHECK(huber_value(constant_map(2.5), constant_map(2), mask) == doctest::Approx(0.125));
  CHECK(huber_value(constant_map(6), constant_map(2), mask) == doctest::Approx(3.5));
  CHECK_THROWS_AS(huber_value(constant_map(1), constant_map(0), constant_map(0)), DataError);
}

TEST_CASE("huber loss is non-negative and zero on a perfect fit") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    Tensor a = oracle::random_tensor({1, 1, 5, 5}, rng), b = oracle::random_tensor({1, 1, 5, 5}, rng);
    const Tensor mask = constant_map(1, {1, 1, 5, 5});
    CHECK(huber_value(a, b, mask) >= 0);
    CHECK(huber_value(a, a, mask) == 0);
  }
}

TEST_CASE("epe and three-pixel error") {
  const Tensor gt = constant_map(10), mask = constant_map(1);
  CHECK(epe(gt, gt, mask) == 0.0);
  CHECK(epe(constant_map(11), gt, mask) == 1.0);
  CHECK(three_pixel_error(gt, gt, mask) == 0.0);
  CHECK(three_pixel_error(constant_map(13), gt, mask) == 0.0);
  CHECK(three_pixel_error(constant_map(7), gt, mask) == 0.0);
  Tensor half = gt;
  for (std::int64_t i = 0; i < half.size(); i += 2) half[i] += 4;
  CHECK(three_pixel_error(half, gt, mask) == 50.0);
  CHECK_THROWS_AS(epe(gt, gt, constant_map(0)), DataError);
  CHECK_THROWS_AS(three_pixel_error(gt, gt, constant_map(0)), DataError);
  CHECK_THROWS_AS(epe(gt, constant_map(1, {1, 1, 2, 2}), mask), ShapeError);
}

TEST_CASE("metrics equal scalar loops and ignore pixel order") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 20);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor p({1, 1, 7, 9}), g({1, 1, 7, 9}), m({1, 1, 7, 9});
    for (std::int64_t i = 0; i < p.size(); ++i) {
      p[i] = static_cast<Real>(u(rng));
      g[i] = static_cast<Real>(u(rng));
      m[i] = u(rng) < 15 ? 1 : 0;
    }
    double sum = 0;
    std::int64_t n = 0, bad = 0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
      if (m[i] == 0) continue;
      const double e = std::abs(static_cast<double>(p[i]) - static_cast<double>(g[i]));
      sum += e;
      bad += e > 3;
      ++n;
    }
    CHECK(epe(p, g, m) == sum / static_cast<double>(n));
    CHECK(three_pixel_error(p, g, m) == 100.0 * static_cast<double>(bad) / static_cast<double>(n));

    std::vector<std::int64_t> perm(static_cast<std::size_t>(p.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor pp(p.shape()), gp(p.shape()), mp(p.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      pp[static_cast<std::int64_t>(i)] = p[perm[i]];
      gp[static_cast<std::int64_t>(i)] = g[perm[i]];
      mp[static_cast<std::int64_t>(i)] = m[perm[i]];
    }
    CHECK(epe(pp, gp, mp) == doctest::Approx(epe(p, g, m)).epsilon(1e-12));
    CHECK(three_pixel_error(pp, gp, mp) == three_pixel_error(p, g, m));
  }
}

TEST_CASE("disparity to depth") {
  const CameraParams cam{1000, 0.05};
  Tensor d({1, 1, 1, 4}, std::vector<Real>{50, 100, 0, -2});
  DepthMap z = disparity_to_depth(d, cam);
  CHECK(z.depth[0] == doctest::Approx(1.0));
  CHECK(z.depth[1] == doctest::Approx(0.5));
  CHECK(z.depth[2] == kInvalidDepth);
  CHECK(z.depth[3] == kInvalidDepth);
  CHECK(z.valid[0] == 1);
  CHECK(z.valid[2] == 0);
  CHECK(z.depth.all_finite());
  CHECK_THROWS_AS(disparity_to_depth(d, CameraParams{0, 1}), ConfigError);
}

TEST_CASE("multiscale loss: weights, perfect prediction and recomputation") {
  std::mt19937_64 rng(10);
  const std::int64_t h = 32, w = 48;
  Tensor gt({1, 1, h, w}), mask({1, 1, h, w}, 1);
  std::uniform_real_distribution<double> u(0, 10);
  for (Real& v : gt.data()) v = static_cast<Real>(u(rng));
  for (std::int64_t i = 0; i < mask.size(); i += 7) mask[i] = 0;

  auto outputs = [&](Graph& g, bool perfect) {
    ModelOutput o;
    for (int s : ModelConfig::decoder_scales()) {
      const ScaledTarget t = downsample_target(gt, mask, s);
      Tensor p = t.disparity;
      if (!perfect)
        for (Real& v : p.data()) v += static_cast<Real>(u(rng) - 5);
      o.disparities.push_back(g.leaf(p));
    }
    Tensor r = gt;
    if (!perfect)
      for (Real& v : r.data()) v += static_cast<Real>(u(rng) - 5);
    o.refined = g.leaf(r);
    return o;
  };

  Graph g1;
  CHECK(multiscale_loss(outputs(g1, true), gt, mask, LossWeights{}).total == 0.0);

  Graph g2;
  const ModelOutput o = outputs(g2, false);
  LossWeights only_full{{0, 0, 0, 0, 1}, 0};
  CHECK(multiscale_loss(o, gt, mask, only_full).total ==
        doctest::Approx(huber_value(o.disparities.back().value(), gt, mask)));

  LossWeights ws;
  const LossReport r = multiscale_loss(o, gt, mask, ws);
  double expect = ws.refined * huber_value(o.refined.value(), gt, mask);
  for (std::size_t i = 0; i < 5; ++i) {
    const ScaledTarget t = downsample_target(gt, mask, ModelConfig::decoder_scales()[i]);
    const double li = huber_value(o.disparities[i].value(), t.disparity, t.mask);
    CHECK(r.scale_losses[i] == doctest::Approx(li));
    expect += ws.scales[i] * li;
  }
  CHECK(r.total == doctest::Approx(expect));
  CHECK(r.refined_pixels == valid_count(mask));

  LossWeights bad{{1, 1}, 1};
  CHECK_THROWS_AS(multiscale_loss(o, gt, mask, bad), ConfigError);
}

TEST_CASE("adam: zero gradient, quadratic bowl, decay and non-finite guard") {
  ParamStore p;
  p.add("w", Tensor::scalar(1));
  Adam zero;
  zero.step(p, {{"w", Tensor::scalar(0)}}, 1e-2);
  CHECK(p.get("w").item() == 1.0);

  Adam adam;
  for (int i = 0; i < 500; ++i) {
    const Real w = p.get("w").item();
    adam.step(p, {{"w", Tensor::scalar(2 * w)}}, 1e-2);
  }
  CHECK(std::abs(p.get("w").item()) < 1e-3);
  CHECK(adam.steps() == 501 - 1);

  AdamConfig sched;
  sched.lr = 2e-4;
  sched.decay_every = 100;
  CHECK(sched.learning_rate(0) == 2e-4);
  CHECK(sched.learning_rate(99) == 2e-4);
  CHECK(sched.learning_rate(100) == 1e-4);
  CHECK(sched.learning_rate(250) == 5e-5);

  KvConfig kv = KvConfig::parse("train.iterations = 300\n");
  CHECK(TrainConfig::read(kv).adam.decay_every == 100);

  ParamStore q;
  q.add("layer.weight", Tensor::full({2}, 1));
  Adam guard;
  Tensor bad({2}, std::vector<Real>{1, std::nan("")});
  try {
    guard.step(q, {{"layer.weight", bad}}, 1e-3);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer.weight") != std::string::npos);
  }
  CHECK(q.get("layer.weight")[0] == 1);
}

TEST_CASE("one training step on a tiny model is bit-reproducible") {
  auto run = [] {
    DiscoModel m(tiny_model());
    TrainConfig tc;
    tc.iterations = 2;
    tc.batch_size = 2;
    BatchLoader loader(DatasetSpec::generator(tiny_rds(), 4), 2, 5);
    Trainer t(m, tc, loader);
    const StepResult r = t.step();
    return std::make_pair(r.loss.total, m.params());
  };
  auto [la, pa] = run();
  auto [lb, pb] = run();
  CHECK(la == lb);
  for (const auto& [path, t] : pa.all()) CHECK(bit_identical(t, pb.get(path)));
}

TEST_CASE("checkpoint round trip and resume equals an uninterrupted run") {
  const fs::path dir = fs::temp_directory_path() / "disco_test_train_ckpt";
  fs::remove_all(dir);
  TrainConfig tc;
  tc.iterations = 4;
  tc.batch_size = 2;
  tc.adam.decay_every = 2;
  const DatasetSpec data = DatasetSpec::generator(tiny_rds(), 6);

  DiscoModel straight(tiny_model());
  BatchLoader l1(data, 2, 9);
  Trainer t1(straight, tc, l1);
  t1.step();
  t1.step();
  save_checkpoint((dir / "mid.ckpt").string(), make_checkpoint(straight, t1.optimizer(), t1.iteration()));
  const StepResult next = t1.step();

  const Checkpoint ck = load_checkpoint((dir / "mid.ckpt").string());
  CHECK(ck.iteration == 2);
  DiscoModel resumed = model_from_checkpoint(ck);
  for (const auto& [path, t] : resumed.params().all()) CHECK(bit_identical(t, ck.params.get(path)));
  BatchLoader l2(data, 2, 9);
  Trainer t2(resumed, tc, l2);
  t2.optimizer().restore(ck.adam_steps, ck.adam_state);
  t2.set_iteration(ck.iteration);
  const StepResult again = t2.step();
  CHECK(again.loss.total == next.loss.total);
  CHECK(again.lr == next.lr);
  for (const auto& [path, t] : straight.params().all()) CHECK(bit_identical(t, resumed.params().get(path)));

  // Encoding is deterministic and self-describing.
  const std::string bytes = encode_checkpoint(ck);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
  CHECK_THROWS_AS(decode_checkpoint("NOTACKPT" + bytes.substr(8)), DataError);

  // Shapes are validated against the embedded configuration.
  Checkpoint wrong = ck;
  wrong.config.set("model.base_width", "6");
  CHECK_THROWS_AS(model_from_checkpoint(wrong), ShapeError);
}

TEST_CASE("eval report: oracle predictions, text and json") {
  const std::int64_t h = 16, w = 16;
  Tensor gt({1, 1, h, w}, 5), mask({1, 1, h, w}, 1);
  EvalReport exact;
  exact.add(gt, gt, mask, 0);
  exact.finish();
  CHECK(exact.epe == 0);
  CHECK(exact.three_pe == 0);
  Tensor off = gt;
  for (Real& v : off.data()) v += 1;
  EvalReport plus;
  plus.add(off, gt, mask, 0);
  plus.add(off, gt, mask, 1);
  plus.finish();
  CHECK(plus.epe == 1.0);
  CHECK(plus.three_pe == 0.0);
  CHECK(plus.valid_pixels == 2 * h * w);

  plus.seconds = 1.5;
  const std::string text = plus.to_text(false);
  CHECK(text.find("epe = 1\n") != std::string::npos);
  CHECK(text.find("timing") == std::string::npos);
  CHECK(plus.to_text().find("timing.seconds = 1.5") != std::string::npos);
  const auto j = nlohmann::json::parse(plus.to_json());
  CHECK(j["epe"].get<double>() == 1.0);
  CHECK(j["per_image"].size() == 2);
  CHECK(j["timing"]["seconds"].get<double>() == 1.5);

  EvalReport empty;
  CHECK_THROWS_AS(empty.finish(), DataError);
}

TEST_CASE("evaluate and trainer run write checkpoints and a final line") {
  const fs::path dir = fs::temp_directory_path() / "disco_test_train_run";
  fs::remove_all(dir);
  DiscoModel m(tiny_model());
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 2;
  tc.checkpoint_every = 2;
  tc.eval_every = 2;
  tc.out_dir = dir.string();
  BatchLoader loader(DatasetSpec::generator(tiny_rds(), 4), 2, 1);
  RdsConfig held = tiny_rds();
  held.seed = 77;
  Dataset heldout(DatasetSpec::generator(held, 2));
  Trainer t(m, tc, loader);
  std::ostringstream log;
  t.run(log, &heldout);
  const std::string text = log.str();
  CHECK(text.find("iter=1 ") != std::string::npos);
  CHECK(text.find("iter=3 ") != std::string::npos);
  CHECK(text.find("final iter=3 heldout_epe=") != std::string::npos);
  CHECK(fs::exists(dir / "initial.ckpt"));
  CHECK(fs::exists(dir / "checkpoint_2.ckpt"));
  CHECK(fs::exists(dir / "last.ckpt"));
  CHECK(fs::exists(dir / "best.ckpt"));
  CHECK(load_checkpoint((dir / "last.ckpt").string()).iteration == 3);

  const EvalReport a = evaluate(m, heldout), b = evaluate(m, heldout);
  CHECK(a.to_text(false) == b.to_text(false));
  CHECK(a.images == 2);

  Dataset stream(DatasetSpec::generator(tiny_rds(), 0));
  CHECK_THROWS_AS(evaluate(m, stream), ConfigError);
}
