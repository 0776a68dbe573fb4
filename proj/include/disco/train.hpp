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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/kv_config.hpp"
#include "disco/loader.hpp"
#include "disco/model.hpp"

namespace disco::inline DISCO_ABI {

// ---- Multi-scale supervision --------------------------------------------------

struct LossWeights {
  // Scales 1/16, 1/8, 1/4, 1/2, 1.
  std::vector<double> scales{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0};
  double refined = 1.0;
};

struct LossReport {
  std::vector<double> scale_losses;
  std::vector<std::int64_t> scale_pixels;
  double refined_loss = 0;
  std::int64_t refined_pixels = 0;
  double total = 0;
  Var total_var;
};

// Sum of weighted Huber losses against the ground truth average-pooled to each
// scale. Coarse scales whose mask ends up empty contribute nothing; an empty
// full-resolution mask is a DataError.
LossReport multiscale_loss(const ModelOutput& output, const Tensor& gt, const Tensor& mask, const LossWeights& weights);

// ---- Optimizer -------------------------------------------------------------------

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Multiply the rate by decay_factor every decay_every iterations (0 = never).
  double decay_factor = 0.5;
  std::int64_t decay_every = 0;

  double learning_rate(std::int64_t iteration) const;
  void validate() const;
};

struct AdamSlot {
  Tensor m;
  Tensor v;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // One bias-corrected update. Every gradient is checked before any parameter
  // changes; a non-finite entry raises NumericError naming the parameter.
  void step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr);

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return t_; }
  const std::map<std::string, AdamSlot>& state() const { return state_; }
  void restore(std::int64_t steps, std::map<std::string, AdamSlot> state);

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::map<std::string, AdamSlot> state_;
};

// ---- Evaluation ------------------------------------------------------------------

struct ImageMetrics {
  std::int64_t index = 0;
  double epe = 0;
  double three_pe = 0;
  std::int64_t valid_pixels = 0;
};

struct EvalReport {
  double epe = 0;       // pixels, averaged over all valid pixels
  double three_pe = 0;  // percent
  std::int64_t valid_pixels = 0;
  std::int64_t images = 0;
  std::vector<ImageMetrics> per_image;
  // Wall-clock data lives apart so the metric fields stay reproducible.
  double seconds = 0;

  // "key = value" lines; timing.* lines only when include_timing is set.
  std::string to_text(bool include_timing = true) const;
  std::string to_json() const;
  void add(const Tensor& prediction, const Tensor& gt, const Tensor& mask, std::int64_t index);
  void finish();

 private:
  double abs_sum_ = 0;
  std::int64_t bad_ = 0;
};

// Runs the model over every sample of a finite dataset. Predictions are
// clamped at zero before scoring.
EvalReport evaluate(const DiscoModel& model, const Dataset& data, int batch_size = 1);
Tensor predict(const DiscoModel& model, const Tensor& left, const Tensor& right);

// ---- Training loop ---------------------------------------------------------------

struct TrainConfig {
  std::int64_t iterations = 2000;
  int batch_size = 4;
  AdamConfig adam;
  LossWeights weights;
  std::int64_t log_every = 1;
  // Periodic checkpoints (0 = only the final one) and held-out evaluation cadence.
  std::int64_t checkpoint_every = 0;
  std::int64_t eval_every = 0;
  std::string out_dir;

  void validate() const;
  void write(KvConfig& kv) const;
  static TrainConfig read(const KvConfig& kv);
};

struct StepResult {
  std::int64_t iteration = 0;  // 1-based index of the completed step
  double lr = 0;
  LossReport loss;
  double seconds = 0;
};

class Trainer {
 public:
  Trainer(DiscoModel& model, TrainConfig config, BatchLoader& loader);

  // Runs the next iteration.
  StepResult step();
  // Runs until config.iterations, logging and checkpointing as configured.
  // `heldout` (optional) drives best-checkpoint selection and the final line.
  void run(std::ostream& log, const Dataset* heldout = nullptr);

  std::int64_t iteration() const { return iteration_; }
  void set_iteration(std::int64_t it) { iteration_ = it; }
  // Configuration text embedded in every checkpoint written by run().
  void set_run_config(KvConfig kv) { run_config_ = std::move(kv); }
  Adam& optimizer() { return adam_; }
  const Adam& optimizer() const { return adam_; }
  const TrainConfig& config() const { return config_; }
  double best_epe() const { return best_epe_; }

  static std::string format_log(const StepResult& r);

 private:
  DiscoModel& model_;
  TrainConfig config_;
  BatchLoader& loader_;
  Adam adam_;
  std::int64_t iteration_ = 0;
  double best_epe_ = -1;
  KvConfig run_config_;
};

}  // namespace disco::inline DISCO_ABI
