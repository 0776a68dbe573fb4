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

#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "../oracles.hpp"
#include "acceptance.hpp"
#include "cli.hpp"
#include "disco/blocks.hpp"
#include "disco/checkpoint.hpp"
#include "disco/io.hpp"
#include "disco/loader.hpp"
#include "disco/loss.hpp"
#include "disco/metrics.hpp"
#include "disco/train.hpp"

namespace disco::acceptance {

namespace {

// Overfit experiment budget.
constexpr int kOverfitSamples = 8;
constexpr std::int64_t kOverfitIterations = 800;
constexpr int kOverfitBatch = 2;

// Generalization experiment budget, shared by the full model and the baseline.
constexpr std::int64_t kStreamSamples = 200;
constexpr std::int64_t kHeldoutSamples = 32;
constexpr std::int64_t kGeneralizationIterations = 2000;
constexpr int kGeneralizationBatch = 2;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class... Args>
std::string format(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Tensor as_batch(const Tensor& chw) { return chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)}); }

bool bit_identical(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const Real x = a[i], y = b[i];
    if (std::memcmp(&x, &y, sizeof(Real)) != 0) return false;
  }
  return true;
}

bool same_params(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [path, t] : a.all())
    if (!b.contains(path) || !bit_identical(t, b.get(path))) return false;
  return true;
}

}  // namespace

Outcome receptive_fields() {
  Outcome o{3, "receptive-field arithmetic", false, {}};
  std::ostringstream out, err;
  const int code = cli::run({"rf"}, out, err);
  const std::string text = out.str();
  const bool layers = receptive_field(3, 1) == 3 && receptive_field(3, 3) == 7 && receptive_field(3, 6) == 13 &&
                      receptive_field(3, 8) == 17;
  const bool printed = text.find("d=1 -> 3 d=3 -> 7 d=6 -> 13 d=8 -> 17") != std::string::npos &&
                       text.find("dilations 1,3,6,8: layers 3 7 13 17 -> stacked 37") != std::string::npos &&
                       text.find("-> stacked 129 (reference value 126") != std::string::npos;
  o.passed = code == cli::kExitOk && layers && printed;
  o.detail = "rf command reports 3/7/13/17, stacked 37, lgcf 129 with 126 noted";
  if (!o.passed) o.detail = "unexpected rf output:\n" + text + err.str();
  return o;
}

Outcome architecture_audit() {
  Outcome o{4, "architecture audit", false, {}};
  const DiscoModel model(ModelConfig::ablation("full"));
  const RdsConfig rc;
  const StereoSample s = generate_rds(rc);
  Graph g;
  const ModelOutput out = model.forward(g, as_batch(s.left), as_batch(s.right));
  bool ok = out.estimation_min_height == 64 / 16 && out.estimation_min_width == 128 / 16;
  std::string shapes;
  const auto& scales = ModelConfig::decoder_scales();
  ok = ok && out.disparities.size() == scales.size();
  for (std::size_t i = 0; ok && i < scales.size(); ++i) {
    ok = out.disparities[i].shape() == Shape{1, 1, 64 / scales[i], 128 / scales[i]};
    shapes += (i ? " " : "") + shape_str(out.disparities[i].shape());
  }
  ok = ok && out.cost_volume.shape() == Shape{1, model.config().max_disparity, 16, 32};
  ok = ok && out.refined.valid() && out.refined.shape() == Shape{1, 1, 64, 128};

  // The dilation switch alters tap spacing only.
  ModelConfig with = ModelConfig::ablation("full"), without = with;
  without.use_dilations = false;
  const ParamStore a = DiscoModel::init_params(with), b = DiscoModel::init_params(without);
  bool same_layout = a.size() == b.size() && a.scalar_count() == b.scalar_count();
  for (const auto& [path, t] : a.all()) same_layout = same_layout && b.contains(path) && b.get(path).shape() == t.shape();
  o.passed = ok && same_layout;
  o.detail = format("min estimation scale %lldx%lld (1/16), decoders %s, cost %s, dilation switch param delta %lld",
                    static_cast<long long>(out.estimation_min_height), static_cast<long long>(out.estimation_min_width),
                    shapes.c_str(), shape_str(out.cost_volume.shape()).c_str(),
                    static_cast<long long>(a.scalar_count()) - static_cast<long long>(b.scalar_count()));
  return o;
}

Outcome geometric_consistency() {
  Outcome o{5, "geometric consistency", false, {}};
  RdsConfig c;
  c.layout = RdsLayout::kLayered;
  const int dmax = static_cast<int>(std::ceil(c.max_disparity));
  double worst = 0;
  std::int64_t hits = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    c.seed = seed;
    const StereoSample s = generate_rds(c);
    Graph g;
    const Tensor warped = warp_horizontal(g.constant(as_batch(s.right)), g.constant(as_batch(s.gt))).value();
    const Var cost = correlation(g.constant(patch_features(as_batch(s.left), 2)),
                                 g.constant(patch_features(as_batch(s.right), 2)), {dmax});
    for (std::int64_t y = 0; y < s.height(); ++y)
      for (std::int64_t x = 0; x < s.width(); ++x) {
        const std::int64_t i = y * s.width() + x;
        if (s.mask[i] == 0) continue;
        worst = std::max(worst, static_cast<double>(std::abs(warped[i] - s.left[i])));
        int best = 0;
        for (int d = 1; d < dmax; ++d)
          if (cost.value().at(0, d, y, x) > cost.value().at(0, best, y, x)) best = d;
        ++total;
        if (best == static_cast<int>(s.gt[i])) ++hits;
      }
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(total);
  o.passed = worst <= 1e-6 && rate >= 0.95;
  o.detail = format("100 layered samples: warp residual max %.2e, correlation argmax %.2f%% of %lld valid pixels", worst,
                    100 * rate, static_cast<long long>(total));
  return o;
}

Outcome overfit() {
  Outcome o{6, "overfit experiment", false, {}};
  const auto t0 = std::chrono::steady_clock::now();
  RdsConfig rc;
  rc.layout = RdsLayout::kConstant;
  rc.seed = 11;
  const DatasetSpec spec = DatasetSpec::generator(rc, kOverfitSamples);
  TrainConfig tc;
  tc.iterations = kOverfitIterations;
  tc.batch_size = kOverfitBatch;
  tc.adam.lr = 2e-4;
  tc.adam.decay_every = (kOverfitIterations + 2) / 3;

  const ModelConfig mc = ModelConfig::ablation("full");
  DiscoModel model(mc);
  BatchLoader loader(spec, kOverfitBatch, 3);
  Trainer trainer(model, tc, loader);
  const std::int64_t per_epoch = loader.batches_per_epoch();
  double first = 0, last_epoch = 0;
  ParamStore early;
  for (std::int64_t it = 1; it <= kOverfitIterations; ++it) {
    const StepResult r = trainer.step();
    if (it == 1) first = r.loss.total;
    if (it == 3) early = model.params();
    if (it > kOverfitIterations - per_epoch) last_epoch += r.loss.total / static_cast<double>(per_epoch);
    if (it % 100 == 0) std::cout << "  overfit " << Trainer::format_log(r) << std::endl;
  }
  const EvalReport rep = evaluate(model, Dataset(spec), 2);

  // Same seed, same first steps, same bits.
  DiscoModel again(mc);
  BatchLoader loader2(spec, kOverfitBatch, 3);
  Trainer t2(again, tc, loader2);
  for (int i = 0; i < 3; ++i) t2.step();
  const bool deterministic = same_params(early, again.params());

  const double reduction = 1 - last_epoch / first;
  const double secs = seconds_since(t0);
  o.passed = rep.epe < 1.0 && reduction >= 0.9 && deterministic && secs <= 15 * 60;
  o.detail = format("%lld iters: training EPE %.3f px, loss %.3f -> %.4f (%.1f%% lower, last-epoch mean), "
                    "deterministic=%s, %.0f s",
                    static_cast<long long>(kOverfitIterations), rep.epe, first, last_epoch, 100 * reduction,
                    deterministic ? "yes" : "no", secs);
  return o;
}

std::vector<Outcome> generalization_and_ablation() {
  RdsConfig train_rds;
  train_rds.seed = 100;
  RdsConfig held_rds = train_rds;
  held_rds.seed = 999;
  const DatasetSpec stream = DatasetSpec::generator(train_rds, kStreamSamples);
  const Dataset heldout(DatasetSpec::generator(held_rds, kHeldoutSamples));

  auto train_variant = [&](const std::string& variant, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig tc;
    tc.iterations = kGeneralizationIterations;
    tc.batch_size = kGeneralizationBatch;
    tc.log_every = 500;
    tc.adam.decay_every = (kGeneralizationIterations + 2) / 3;
    ModelConfig mc = ModelConfig::ablation(variant);
    mc.seed = 5;
    DiscoModel model(mc);
    BatchLoader loader(stream, kGeneralizationBatch, 21);
    Trainer trainer(model, tc, loader);
    std::ostringstream log;
    for (std::int64_t it = 1; it <= tc.iterations; ++it) {
      const StepResult r = trainer.step();
      if (it % tc.log_every == 0) std::cout << "  " << variant << " " << Trainer::format_log(r) << std::endl;
    }
    const EvalReport rep = evaluate(model, heldout, 2);
    secs = seconds_since(t0);
    std::cout << "  " << variant << format(" heldout_epe=%.4f heldout_3pe=%.2f", rep.epe, rep.three_pe) << std::endl;
    return rep;
  };

  double full_secs = 0, base_secs = 0;
  const EvalReport full = train_variant("full", full_secs);
  const EvalReport base = train_variant("baseline", base_secs);

  Outcome g{7, "generalization smoke test", false, {}};
  g.passed = full.epe < 3.0 && full.three_pe < 25.0 && full_secs <= 60 * 60;
  g.detail = format("%lld iters on a %lld-sample stream: held-out EPE %.3f px, 3PE %.2f%% on %lld unseen samples, %.0f s",
                    static_cast<long long>(kGeneralizationIterations), static_cast<long long>(kStreamSamples), full.epe,
                    full.three_pe, static_cast<long long>(kHeldoutSamples), full_secs);

  Outcome a{8, "ablation direction", false, {}};
  a.passed = full.epe <= 1.1 * base.epe;
  a.detail = format("held-out EPE full %.3f vs baseline %.3f (ratio %.3f, limit 1.1; strict ordering %s)", full.epe,
                    base.epe, full.epe / base.epe, full.epe <= base.epe ? "holds" : "does not hold");
  return {g, a};
}

Outcome metric_exactness() {
  Outcome o{9, "metric and loss exactness", false, {}};
  auto map = [](Real v) { return Tensor({1, 1, 4, 6}, v); };
  const Tensor ones = map(1);
  const double h05 = huber_value(map(2.5), map(2), ones), h4 = huber_value(map(6), map(2), ones);
  const double e1 = epe(map(11), map(10), ones);
  Tensor half = map(10);
  for (std::int64_t i = 0; i < half.size(); i += 2) half[i] += 4;
  const double p50 = three_pixel_error(half, map(10), ones);
  const double p3 = three_pixel_error(map(13), map(10), ones);
  const DepthMap z = disparity_to_depth(Tensor({1, 1, 1, 1}, static_cast<Real>(50)), CameraParams{1000, 0.05});
  o.passed = h05 == 0.125 && h4 == 3.5 && e1 == 1.0 && p50 == 50.0 && p3 == 0.0 &&
             std::abs(z.depth[0] - 1.0) <= 1e-6;
  o.detail = format("huber(0.5)=%g huber(4)=%g epe(offset 1)=%g 3pe(half off by 4)=%g%% 3pe(|t|=3)=%g%% depth=%g m", h05,
                    h4, e1, p50, p3, static_cast<double>(z.depth[0]));
  return o;
}

Outcome io_exactness() {
  Outcome o{10, "I/O exactness", false, {}};
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 40), chans(0, 1);
  std::normal_distribution<double> val(0, 100);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    Tensor m({chans(rng) ? 3 : 1, dim(rng), dim(rng)});
    for (Real& v : m.data()) v = static_cast<Real>(val(rng));
    const double scale = i % 2 ? 1.0 : -1.0;  // positive scale = big-endian
    const PfmImage back = parse_pfm(encode_pfm(m, scale), "random map");
    if (back.scale == scale && bit_identical(back.data, m)) ++exact;
  }

  // Resume: save after two steps, reload, take one step; compare with three straight steps.
  ModelConfig mc;
  mc.base_width = 4;
  mc.growth = 4;
  mc.max_disparity = 8;
  mc.encoder_widths = {8, 8, 8};
  mc.decoder_widths = {8, 8, 8, 4, 4};
  mc.refine_widths = {4, 4, 4};
  RdsConfig rc;
  rc.height = 32;
  rc.width = 64;
  rc.max_disparity = 12;
  const DatasetSpec data = DatasetSpec::generator(rc, 6);
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 2;
  tc.adam.decay_every = 2;
  DiscoModel straight(mc);
  BatchLoader l1(data, 2, 9);
  Trainer t1(straight, tc, l1);
  t1.step();
  t1.step();
  const std::string bytes = encode_checkpoint(make_checkpoint(straight, t1.optimizer(), t1.iteration()));
  const StepResult next = t1.step();
  const Checkpoint ck = decode_checkpoint(bytes);
  DiscoModel resumed = model_from_checkpoint(ck);
  BatchLoader l2(data, 2, 9);
  Trainer t2(resumed, tc, l2);
  t2.optimizer().restore(ck.adam_steps, ck.adam_state);
  t2.set_iteration(ck.iteration);
  const StepResult again = t2.step();
  const bool resume_ok = again.loss.total == next.loss.total && same_params(straight.params(), resumed.params());

  o.passed = exact == 1000 && resume_ok;
  o.detail = format("pfm round trips bit-exact %d/1000 (both byte orders), checkpoint resume bitwise %s", exact,
                    resume_ok ? "equal" : "DIFFERENT");
  return o;
}

}  // namespace disco::acceptance
