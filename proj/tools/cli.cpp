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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "disco/blocks.hpp"
#include "disco/checkpoint.hpp"
#include "disco/errors.hpp"
#include "disco/io.hpp"
#include "disco/loader.hpp"
#include "disco/metrics.hpp"
#include "disco/model.hpp"
#include "disco/train.hpp"

namespace disco::cli {

namespace fs = std::filesystem;

namespace {

// Stated receptive field of the six-layer context branch, printed next to the
// value produced by the composition rule.
constexpr int kLgcfReferenceRf = 126;

// ---- Run configuration ---------------------------------------------------------

struct RunConfig {
  KvConfig kv;
  fs::path base_dir;
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  DatasetSpec data;
  AugmentConfig augment;
  std::optional<DatasetSpec> heldout;
  std::string out_dir;
};

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path fp(p);
  return (fp.is_absolute() || base.empty() ? fp : base / fp).string();
}

DatasetSpec dataset_from(const KvConfig& kv, const std::string& prefix, const fs::path& base, const RdsConfig& rds,
                         std::int64_t default_count) {
  const std::string source = kv.get_string(prefix + "source", "rds");
  if (source == "manifest") return DatasetSpec::from_manifest(resolve(base, kv.require_string(prefix + "manifest")));
  if (source != "rds") throw ConfigError(prefix + "source must be 'rds' or 'manifest', got '" + source + "'");
  return DatasetSpec::generator(rds, kv.get_int(prefix + "count", default_count));
}

KvConfig load_kv(const std::string& path, std::optional<std::uint64_t> seed) {
  KvConfig kv = path.empty() ? KvConfig{} : KvConfig::load(path);
  if (seed) kv.set("seed", std::to_string(*seed));
  return kv;
}

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out) {
  RunConfig rc;
  rc.kv = load_kv(path, seed);
  rc.base_dir = fs::path(path).parent_path();
  if (!rc.kv.has("seed")) throw ConfigError("a seed is required: set 'seed = N' in the config or pass --seed");
  rc.seed = static_cast<std::uint64_t>(rc.kv.get_int("seed", 0));
  // Every stochastic component derives from the run seed unless pinned.
  if (!rc.kv.has("model.seed")) rc.kv.set("model.seed", std::to_string(rc.seed));
  if (!rc.kv.has("rds.seed")) rc.kv.set("rds.seed", std::to_string(rc.seed));
  rc.model = ModelConfig::read(rc.kv);
  rc.train = TrainConfig::read(rc.kv);
  const RdsConfig rds = RdsConfig::read(rc.kv);
  rc.data = dataset_from(rc.kv, "data.", rc.base_dir, rds, 0);
  rc.augment = AugmentConfig::read(rc.kv);
  const std::string held = rc.kv.get_string("heldout.source", "rds");
  if (held != "none") {
    RdsConfig hrds = rds;
    hrds.seed = static_cast<std::uint64_t>(
        rc.kv.get_int("heldout.seed", static_cast<std::int64_t>(mix_seed(rds.seed, 0x4e1d))));
    rc.heldout = dataset_from(rc.kv, "heldout.", rc.base_dir, hrds, 32);
  }
  rc.out_dir = !out.empty() ? out : rc.kv.get_string("train.out_dir", "disco_out");
  rc.train.out_dir = rc.out_dir;
  return rc;
}

// ---- Helpers -------------------------------------------------------------------

// Mirrors log output to a second stream.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == EOF) return !EOF;
    const int r1 = a_->sputc(static_cast<char>(c));
    const int r2 = b_->sputc(static_cast<char>(c));
    return r1 == EOF || r2 == EOF ? EOF : c;
  }
  int sync() override { return a_->pubsync() == 0 && b_->pubsync() == 0 ? 0 : -1; }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

Tensor as_batch(const Tensor& chw) { return chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)}); }

// Replicates the last row/column so both sides become multiples of 16.
Tensor pad_to_multiple(const Tensor& chw, std::int64_t multiple) {
  const std::int64_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  const std::int64_t ph = (h + multiple - 1) / multiple * multiple, pw = (w + multiple - 1) / multiple * multiple;
  Tensor out({c, ph, pw});
  for (std::int64_t k = 0; k < c; ++k)
    for (std::int64_t y = 0; y < ph; ++y)
      for (std::int64_t x = 0; x < pw; ++x) out[(k * ph + y) * pw + x] = chw[(k * h + std::min(y, h - 1)) * w + std::min(x, w - 1)];
  return out;
}

// ---- Commands --------------------------------------------------------------------

int cmd_train(const RunConfig& rc, const std::string& resume, std::ostream& out) {
  fs::create_directories(rc.out_dir);
  std::ofstream file((fs::path(rc.out_dir) / "train.log").string(), resume.empty() ? std::ios::trunc : std::ios::app);
  if (!file) throw DataError("cannot write the training log under '" + rc.out_dir + "'");
  TeeBuf tee(out.rdbuf(), file.rdbuf());
  std::ostream log(&tee);

  std::optional<Checkpoint> ck;
  if (!resume.empty()) ck = load_checkpoint(resume);
  DiscoModel model = ck ? model_from_checkpoint(*ck) : DiscoModel(rc.model);
  BatchLoader loader(rc.data, rc.train.batch_size, mix_seed(rc.seed, 0x10ad), rc.augment);
  std::optional<Dataset> heldout;
  if (rc.heldout) heldout.emplace(*rc.heldout);

  Trainer trainer(model, rc.train, loader);
  trainer.set_run_config(rc.kv);
  if (ck) {
    trainer.optimizer().restore(ck->adam_steps, ck->adam_state);
    trainer.set_iteration(ck->iteration);
    log << "resumed from " << resume << " at iteration " << ck->iteration << std::endl;
  }
  log << "model parameters " << model.params().scalar_count() << " variant dilations=" << rc.model.use_dilations
      << " lgcf=" << rc.model.use_lgcf << " refinement=" << rc.model.use_refinement << std::endl;
  trainer.run(log, heldout ? &*heldout : nullptr);
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  bool oracle = false;
  double oracle_offset = 0;
};

int cmd_eval(const RunConfig& rc, const EvalArgs& args, std::ostream& out) {
  std::optional<DatasetSpec> spec = rc.heldout;
  if (!args.manifest.empty()) spec = DatasetSpec::from_manifest(args.manifest);
  if (!spec) throw ConfigError("no evaluation data: set heldout.* in the config or pass --manifest");
  const Dataset data(*spec);
  if (data.unbounded()) throw ConfigError("evaluation data must be finite (heldout.count > 0)");

  EvalReport report;
  const auto start = std::chrono::steady_clock::now();
  if (args.oracle) {
    for (std::int64_t i = 0; i < data.size(); ++i) {
      const StereoSample s = data.get(i);
      Tensor pred = s.gt;
      for (Real& v : pred.data()) v += static_cast<Real>(args.oracle_offset);
      report.add(pred, s.gt, s.mask, i);
    }
    report.finish();
  } else {
    if (args.checkpoint.empty()) throw UsageError("eval needs --checkpoint (or --oracle)");
    const DiscoModel model = model_from_checkpoint(load_checkpoint(args.checkpoint));
    const StereoSample first = data.get(0);
    if (first.channels() != model.config().image_channels) {
      throw ConfigError("checkpoint expects " + std::to_string(model.config().image_channels) +
                        " image channels, dataset has " + std::to_string(first.channels()));
    }
    check_input_dims(first.height(), first.width());
    report = evaluate(model, data, 1);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::create_directories(rc.out_dir);
  write_file((fs::path(rc.out_dir) / "eval.txt").string(), report.to_text(false));
  write_file((fs::path(rc.out_dir) / "eval.json").string(), report.to_json());
  out << report.to_text();
  return kExitOk;
}

struct InferArgs {
  std::string checkpoint, left, right, output, depth_output;
  bool auto_pad = false;
  std::optional<double> focal, baseline;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const DiscoModel model = model_from_checkpoint(load_checkpoint(a.checkpoint));
  const Tensor left = read_image(a.left), right = read_image(a.right);
  if (left.shape() != right.shape()) {
    throw ShapeError("left " + shape_str(left.shape()) + " and right " + shape_str(right.shape()) + " differ");
  }
  const std::int64_t h = left.dim(1), w = left.dim(2);
  if (!a.auto_pad && (h % 16 != 0 || w % 16 != 0)) {
    throw ConfigError("input " + std::to_string(h) + "x" + std::to_string(w) +
                      " is not a multiple of 16; pass --auto-pad to pad and crop back");
  }
  const Tensor lp = a.auto_pad ? pad_to_multiple(left, 16) : left;
  const Tensor rp = a.auto_pad ? pad_to_multiple(right, 16) : right;
  const Tensor full = predict(model, as_batch(lp), as_batch(rp));
  Tensor disp({1, h, w});
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) disp[y * w + x] = full[y * lp.dim(2) + x];
  write_pfm(a.output, disp);
  out << "disparity " << h << "x" << w << " -> " << a.output << "\n";
  if (a.focal || a.baseline) {
    if (!a.focal || !a.baseline) throw UsageError("depth output needs both --focal and --baseline");
    const DepthMap z = disparity_to_depth(disp, CameraParams{*a.focal, *a.baseline});
    std::string path = a.depth_output;
    if (path.empty()) {
      fs::path p(a.output);
      path = (p.parent_path() / (p.stem().string() + "_depth.pfm")).string();
    }
    write_pfm(path, z.depth);
    out << "depth (meters, " << kInvalidDepth << " marks invalid) -> " << path << "\n";
  }
  return kExitOk;
}

std::string join_layer_rfs(const std::vector<ConvSpec>& specs) {
  std::string s;
  for (const ConvSpec& c : specs) s += (s.empty() ? "" : " ") + std::to_string(receptive_field(c));
  return s;
}

int cmd_rf(const ModelConfig& m, std::ostream& out) {
  out << "rule: rC(k,d) = (k-1)(d-1) + k; a unit-stride stack of n layers sees sum(rC) - (n-1)\n";
  out << "single 3x3 layers:";
  for (int d : {1, 3, 6, 8}) out << " d=" << d << " -> " << receptive_field(3, d);
  out << "\n";
  for (int i = 0; i < 3; ++i) {
    const DenseBlockSpec b = m.encoder_block(i);
    out << "encoder block " << i + 1 << " dilations " << join_ints(b.dilations) << ": layers "
        << join_layer_rfs(b.conv_specs()) << " -> stacked " << stacked_receptive_field(b.conv_specs()) << "\n";
  }
  const DenseBlockSpec bn = m.bottleneck_block();
  out << "bottleneck dilations " << join_ints(bn.dilations) << ": layers " << join_layer_rfs(bn.conv_specs())
      << " -> stacked " << stacked_receptive_field(bn.conv_specs()) << "\n";
  const DenseBlockSpec lg = m.lgcf_spec().dense;
  const int rule = stacked_receptive_field(lg.conv_specs());
  out << "lgcf dense branch dilations " << join_ints(lg.dilations) << ": layers " << join_layer_rfs(lg.conv_specs())
      << " -> stacked " << rule;
  if (lg.dilations == std::vector<int>{1, 3, 6, 12, 18, 24}) {
    out << " (reference value " << kLgcfReferenceRf << "; the composition rule gives " << rule
        << ", a discrepancy of " << rule - kLgcfReferenceRf << ")";
  }
  out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DISCO stereo disparity estimation", "disco"};
  app.require_subcommand(1);
  std::string config, out_dir;
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config, "key = value configuration file");
    if (config_required) opt->required();
    sub->add_option("--seed", seed, "override the run seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  std::string resume;
  CLI::App* train = app.add_subcommand("train", "train a model");
  common(train, true);
  train->add_option("--resume", resume, "continue from a checkpoint");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on held-out data");
  common(eval, true);
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint to evaluate");
  eval->add_option("--manifest", eval_args.manifest, "evaluate on a manifest instead of the configured held-out set");
  eval->add_flag("--oracle", eval_args.oracle, "score the ground truth itself (plus --oracle-offset)");
  eval->add_option("--oracle-offset", eval_args.oracle_offset, "constant added to the oracle prediction");

  InferArgs infer_args;
  CLI::App* infer = app.add_subcommand("infer", "predict disparity for one image pair");
  common(infer, false);
  infer->add_option("--checkpoint", infer_args.checkpoint)->required();
  infer->add_option("--left", infer_args.left)->required();
  infer->add_option("--right", infer_args.right)->required();
  infer->add_option("--output", infer_args.output, "disparity PFM")->required();
  infer->add_flag("--auto-pad", infer_args.auto_pad, "pad to a multiple of 16 and crop the result back");
  infer->add_option("--focal", infer_args.focal, "focal length in pixels (enables depth output)");
  infer->add_option("--baseline", infer_args.baseline, "baseline in meters (enables depth output)");
  infer->add_option("--depth-output", infer_args.depth_output, "depth PFM path");

  GradcheckOptions gc;
  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient checks in double precision");
  common(grad, false);
  grad->add_option("--op", gc.op, "op name or 'all'");
  grad->add_option("--seeds", gc.seeds, "random seeds per op");
  grad->add_option("--tolerance", gc.tolerance, "max relative error");
  grad->add_option("--perturb-weight-grad", gc.perturb_weight_grad, "test hook: corrupt conv weight gradients");

  CLI::App* rf = app.add_subcommand("rf", "receptive-field report");
  common(rf, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(load_run_config(config, seed, out_dir), resume, out);
    if (*eval) return cmd_eval(load_run_config(config, seed, out_dir), eval_args, out);
    if (*infer) return cmd_infer(infer_args, out);
    if (*grad) return gradcheck_command(gc, out);
    if (*rf) {
      const KvConfig kv = load_kv(config, seed);
      return cmd_rf(ModelConfig::read(kv), out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace disco::cli
