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

#include "disco/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "json.hpp"

#include "disco/checkpoint.hpp"
#include "disco/errors.hpp"
#include "disco/loss.hpp"
#include "disco/metrics.hpp"
#include "disco/ops.hpp"

namespace disco::inline DISCO_ABI {

// ---- Loss ---------------------------------------------------------------------

LossReport multiscale_loss(const ModelOutput& output, const Tensor& gt, const Tensor& mask, const LossWeights& weights) {
  const std::vector<int>& scales = ModelConfig::decoder_scales();
  if (weights.scales.size() != output.disparities.size() || output.disparities.size() != scales.size()) {
    throw ConfigError("loss weights list " + std::to_string(weights.scales.size()) + " entries for " +
                      std::to_string(output.disparities.size()) + " disparity scales");
  }
  LossReport r;
  Var total;
  auto accumulate = [&](Var term, double w) {
    Var scaled = ops::scale(term, static_cast<Real>(w));
    total = total.valid() ? ops::add(total, scaled) : scaled;
  };
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const ScaledTarget t = downsample_target(gt, mask, scales[i]);
    const std::int64_t n = valid_count(t.mask);
    r.scale_pixels.push_back(n);
    if (n == 0) {
      if (scales[i] == 1) throw DataError("multiscale_loss: degenerate input, no valid ground-truth pixel");
      r.scale_losses.push_back(0);
      continue;
    }
    Var l = huber_loss(output.disparities[i], t.disparity, t.mask);
    r.scale_losses.push_back(l.value().item());
    accumulate(l, weights.scales[i]);
  }
  if (output.refined.valid()) {
    Var l = huber_loss(output.refined, gt, mask);
    r.refined_loss = l.value().item();
    r.refined_pixels = valid_count(mask);
    accumulate(l, weights.refined);
  }
  r.total_var = total;
  r.total = total.value().item();
  return r;
}

// ---- Adam ---------------------------------------------------------------------

double AdamConfig::learning_rate(std::int64_t iteration) const {
  if (decay_every <= 0) return lr;
  return lr * std::pow(decay_factor, static_cast<double>(iteration / decay_every));
}

void AdamConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("optim.lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("adam betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("optim.eps must be positive");
  if (!(decay_factor > 0)) throw ConfigError("optim.decay_factor must be positive");
  if (decay_every < 0) throw ConfigError("optim.decay_every must be >= 0");
}

void Adam::step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr) {
  for (const auto& [path, g] : grads) {
    if (!params.contains(path)) throw UsageError("gradient for unknown parameter '" + path + "'");
    if (g.shape() != params.get(path).shape()) throw ShapeError("gradient shape mismatch for '" + path + "'");
    if (!g.all_finite()) throw NumericError("non-finite gradient in parameter '" + path + "'");
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1 - std::pow(b2, static_cast<double>(t_));
  for (const auto& [path, g] : grads) {
    Tensor& p = params.get_mut(path);
    auto it = state_.find(path);
    if (it == state_.end()) it = state_.emplace(path, AdamSlot{Tensor::zeros(p.shape()), Tensor::zeros(p.shape())}).first;
    Real* m = it->second.m.ptr();
    Real* v = it->second.v.ptr();
    Real* w = p.ptr();
    const Real* gp = g.ptr();
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double gi = gp[i];
      const double mi = b1 * m[i] + (1 - b1) * gi;
      const double vi = b2 * v[i] + (1 - b2) * gi * gi;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      w[i] = static_cast<Real>(w[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + config_.eps));
    }
  }
}

void Adam::restore(std::int64_t steps, std::map<std::string, AdamSlot> state) {
  t_ = steps;
  state_ = std::move(state);
}

// ---- Evaluation -----------------------------------------------------------------

void EvalReport::add(const Tensor& prediction, const Tensor& gt, const Tensor& mask, std::int64_t index) {
  if (prediction.shape() != gt.shape() || gt.shape() != mask.shape()) {
    throw ShapeError("evaluation: prediction " + shape_str(prediction.shape()) + " vs ground truth " +
                     shape_str(gt.shape()));
  }
  ImageMetrics m;
  m.index = index;
  m.valid_pixels = valid_count(mask);
  if (m.valid_pixels > 0) {
    m.epe = disco::epe(prediction, gt, mask);
    m.three_pe = three_pixel_error(prediction, gt, mask);
    for (std::int64_t i = 0; i < prediction.size(); ++i) {
      if (mask[i] <= Real(0.5)) continue;
      const double e = std::abs(static_cast<double>(prediction[i]) - static_cast<double>(gt[i]));
      abs_sum_ += e;
      bad_ += e > 3.0;
    }
  }
  valid_pixels += m.valid_pixels;
  ++images;
  per_image.push_back(m);
}

void EvalReport::finish() {
  if (valid_pixels == 0) throw DataError("evaluation: degenerate input, no valid ground-truth pixel");
  epe = abs_sum_ / static_cast<double>(valid_pixels);
  three_pe = 100.0 * static_cast<double>(bad_) / static_cast<double>(valid_pixels);
}

std::string EvalReport::to_text(bool include_timing) const {
  std::string s;
  auto line = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  line("epe", format_double(epe));
  line("three_pe", format_double(three_pe));
  line("valid_pixels", std::to_string(valid_pixels));
  line("images", std::to_string(images));
  for (const ImageMetrics& m : per_image) {
    const std::string p = "image." + std::to_string(m.index) + ".";
    line(p + "epe", format_double(m.epe));
    line(p + "three_pe", format_double(m.three_pe));
    line(p + "valid_pixels", std::to_string(m.valid_pixels));
  }
  if (include_timing) line("timing.seconds", format_double(seconds));
  return s;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "disco.eval.v1";
  j["epe"] = epe;
  j["three_pe"] = three_pe;
  j["valid_pixels"] = valid_pixels;
  j["images"] = images;
  j["per_image"] = nlohmann::ordered_json::array();
  for (const ImageMetrics& m : per_image) {
    j["per_image"].push_back({{"index", m.index}, {"epe", m.epe}, {"three_pe", m.three_pe}, {"valid_pixels", m.valid_pixels}});
  }
  j["timing"] = {{"seconds", seconds}};
  return j.dump(2) + "\n";
}

Tensor predict(const DiscoModel& model, const Tensor& left, const Tensor& right) {
  Graph g;
  g.set_grad_enabled(false);
  Tensor d = model.forward(g, left, right).final_disparity().value();
  for (Real& v : d.data()) v = std::max(v, Real(0));
  return d;
}

EvalReport evaluate(const DiscoModel& model, const Dataset& data, int batch_size) {
  if (data.unbounded()) throw ConfigError("evaluation needs a finite dataset (set a sample count)");
  if (batch_size < 1) throw ConfigError("evaluation batch size must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  for (std::int64_t begin = 0; begin < data.size(); begin += batch_size) {
    std::vector<StereoSample> samples;
    for (std::int64_t i = begin; i < std::min<std::int64_t>(begin + batch_size, data.size()); ++i) {
      samples.push_back(data.get(i));
    }
    const Batch b = stack_samples(samples);
    const Tensor pred = predict(model, b.left, b.right);
    const std::int64_t plane = b.gt.dim(2) * b.gt.dim(3);
    for (std::int64_t k = 0; k < b.size(); ++k) {
      const Shape one{1, 1, b.gt.dim(2), b.gt.dim(3)};
      auto slice = [&](const Tensor& t) {
        return Tensor(one, std::vector<Real>(t.ptr() + k * plane, t.ptr() + (k + 1) * plane));
      };
      report.add(slice(pred), slice(b.gt), slice(b.mask), begin + k);
    }
  }
  report.finish();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---- Training -------------------------------------------------------------------

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("train.iterations must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (log_every < 1) throw ConfigError("train.log_every must be >= 1");
  if (checkpoint_every < 0 || eval_every < 0) throw ConfigError("checkpoint/eval cadence must be >= 0");
  if (weights.scales.size() != ModelConfig::decoder_scales().size()) {
    throw ConfigError("loss.scale_weights needs " + std::to_string(ModelConfig::decoder_scales().size()) + " entries");
  }
  adam.validate();
}

void TrainConfig::write(KvConfig& kv) const {
  kv.set("train.iterations", std::to_string(iterations));
  kv.set("train.batch_size", std::to_string(batch_size));
  kv.set("train.log_every", std::to_string(log_every));
  kv.set("train.checkpoint_every", std::to_string(checkpoint_every));
  kv.set("train.eval_every", std::to_string(eval_every));
  kv.set("optim.lr", format_double(adam.lr));
  kv.set("optim.beta1", format_double(adam.beta1));
  kv.set("optim.beta2", format_double(adam.beta2));
  kv.set("optim.eps", format_double(adam.eps));
  kv.set("optim.decay_factor", format_double(adam.decay_factor));
  kv.set("optim.decay_every", std::to_string(adam.decay_every));
  kv.set("loss.scale_weights", join_doubles(weights.scales));
  kv.set("loss.refined_weight", format_double(weights.refined));
}

TrainConfig TrainConfig::read(const KvConfig& kv) {
  TrainConfig c;
  c.iterations = kv.get_int("train.iterations", c.iterations);
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
  c.log_every = kv.get_int("train.log_every", c.log_every);
  c.checkpoint_every = kv.get_int("train.checkpoint_every", c.checkpoint_every);
  c.eval_every = kv.get_int("train.eval_every", c.eval_every);
  c.out_dir = kv.get_string("train.out_dir", c.out_dir);
  c.adam.lr = kv.get_double("optim.lr", c.adam.lr);
  c.adam.beta1 = kv.get_double("optim.beta1", c.adam.beta1);
  c.adam.beta2 = kv.get_double("optim.beta2", c.adam.beta2);
  c.adam.eps = kv.get_double("optim.eps", c.adam.eps);
  c.adam.decay_factor = kv.get_double("optim.decay_factor", c.adam.decay_factor);
  // Default schedule: halve the rate after each third of the budget.
  c.adam.decay_every = kv.get_int("optim.decay_every", std::max<std::int64_t>(1, (c.iterations + 2) / 3));
  c.weights.scales = kv.get_double_list("loss.scale_weights", c.weights.scales);
  c.weights.refined = kv.get_double("loss.refined_weight", c.weights.refined);
  c.validate();
  return c;
}

Trainer::Trainer(DiscoModel& model, TrainConfig config, BatchLoader& loader)
    : model_(model), config_(std::move(config)), loader_(loader), adam_(config_.adam) {
  config_.validate();
}

StepResult Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const Batch batch = loader_.batch(iteration_);
  Graph g;
  StepResult r;
  r.iteration = iteration_ + 1;
  r.lr = config_.adam.learning_rate(iteration_);
  try {
    const ModelOutput out = model_.forward(g, batch.left, batch.right);
    r.loss = multiscale_loss(out, batch.gt, batch.mask, config_.weights);
    if (!std::isfinite(r.loss.total)) throw NumericError("loss is " + std::to_string(r.loss.total));
    g.backward(r.loss.total_var);
    std::map<std::string, Tensor> grads;
    for (const auto& [path, _] : model_.params().all()) grads.emplace(path, g.param_grad(path));
    adam_.step(model_.params(), grads, r.lr);
  } catch (const NumericError& e) {
    std::string diag;
    for (const auto& [path, t] : model_.params().all()) {
      if (!t.all_finite()) diag += " non-finite parameter '" + path + "';";
    }
    throw NumericError("iteration " + std::to_string(r.iteration) + ": " + e.what() + (diag.empty() ? "" : ";" + diag));
  }
  ++iteration_;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string Trainer::format_log(const StepResult& r) {
  char buf[64];
  std::string s = "iter=" + std::to_string(r.iteration);
  std::snprintf(buf, sizeof(buf), " lr=%.6g loss=%.6f", r.lr, r.loss.total);
  s += buf;
  const std::vector<int>& scales = ModelConfig::decoder_scales();
  for (std::size_t i = 0; i < r.loss.scale_losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " s%d=%.6f", scales[i], r.loss.scale_losses[i]);
    s += buf;
  }
  if (r.loss.refined_pixels > 0) {
    std::snprintf(buf, sizeof(buf), " refined=%.6f", r.loss.refined_loss);
    s += buf;
  }
  std::snprintf(buf, sizeof(buf), " time=%.3fs", r.seconds);
  return s + buf;
}

void Trainer::run(std::ostream& log, const Dataset* heldout) {
  namespace fs = std::filesystem;
  const bool save = !config_.out_dir.empty();
  if (save) fs::create_directories(config_.out_dir);
  auto checkpoint = [&](const std::string& name) {
    if (save) save_checkpoint((fs::path(config_.out_dir) / name).string(), make_checkpoint(model_, adam_, iteration_, run_config_));
  };
  auto heldout_eval = [&]() {
    const EvalReport rep = evaluate(model_, *heldout, config_.batch_size);
    const bool better = best_epe_ < 0 || rep.epe < best_epe_;
    if (better) {
      best_epe_ = rep.epe;
      checkpoint("best.ckpt");
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "eval iter=%lld heldout_epe=%.6f heldout_3pe=%.4f%s",
                  static_cast<long long>(iteration_), rep.epe, rep.three_pe, better ? " best" : "");
    log << buf << std::endl;
    return rep;
  };

  if (iteration_ == 0) checkpoint("initial.ckpt");
  while (iteration_ < config_.iterations) {
    const StepResult r = step();
    if (r.iteration % config_.log_every == 0 || r.iteration == 1 || r.iteration == config_.iterations) {
      log << format_log(r) << std::endl;
    }
    if (config_.checkpoint_every > 0 && iteration_ % config_.checkpoint_every == 0) {
      checkpoint("checkpoint_" + std::to_string(iteration_) + ".ckpt");
      checkpoint("last.ckpt");
    }
    if (heldout && config_.eval_every > 0 && iteration_ % config_.eval_every == 0 && iteration_ < config_.iterations) {
      heldout_eval();
    }
  }
  checkpoint("last.ckpt");
  if (heldout) {
    const EvalReport rep = heldout_eval();
    char buf[200];
    std::snprintf(buf, sizeof(buf), "final iter=%lld heldout_epe=%.6f heldout_3pe=%.4f best_heldout_epe=%.6f",
                  static_cast<long long>(iteration_), rep.epe, rep.three_pe, best_epe_);
    log << buf << std::endl;
  } else {
    log << "final iter=" << iteration_ << std::endl;
  }
}

}  // namespace disco::inline DISCO_ABI
