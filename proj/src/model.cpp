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

#include "disco/model.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "disco/errors.hpp"
#include "disco/ops.hpp"

namespace disco::inline DISCO_ABI {

namespace {

// Initial weight gains. Residual branches start small so twelve stacked blocks
// keep activations near unit scale; disparity heads and the refinement output
// start at zero so the untrained network predicts zero disparity.
constexpr double kResidualGain = 0.1;
constexpr double kHeadGain = 0.0;

std::string indexed(const std::string& base, std::size_t i) { return base + std::to_string(i); }

// Re-throws component errors with the subnetwork name prepended.
template <class F>
auto annotate(const char* subnetwork, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ShapeError& e) {
    throw ShapeError(std::string(subnetwork) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(subnetwork) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(subnetwork) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(subnetwork) + ": " + e.what());
  }
}

void declare_residual(const ParamBuilder& b, int in, int out, int stride) {
  b.sub("conv1").conv(ConvSpec::same(in, out, 3, 1, stride));
  b.sub("conv2").conv(ConvSpec::same(out, out, 3, 1, 1), kResidualGain);
  if (in != out || stride != 1) b.sub("proj").conv(ConvSpec::same(in, out, 1, 1, stride));
}

// Channel count of the decoder skip input at decoder index i (i >= 1).
int decoder_skip_channels(const ModelConfig& c, std::size_t i) {
  switch (i) {
    case 1: return c.encoder_block(1).output_channels();
    case 2: return c.encoder_block(0).output_channels();
    default: return c.base_width;
  }
}

int decoder_input_channels(const ModelConfig& c, std::size_t i) {
  if (i == 0) return c.bottleneck_block().output_channels();
  return c.decoder_widths[i - 1] + decoder_skip_channels(c, i) + 1;
}

DeconvSpec up2(int in, int out) { return DeconvSpec{4, 2, 1, 0, in, out}; }

// Maps [0,1] intensities to [-1,1]. Without it the mean brightness dominates
// every feature channel and the untrained cost volume carries no matching signal.
Tensor center_intensities(const Tensor& image) {
  Tensor out = image;
  for (Real& v : out.data()) v = 2 * v - 1;
  return out;
}

}  // namespace

const std::vector<int>& ModelConfig::decoder_scales() {
  static const std::vector<int> scales{16, 8, 4, 2, 1};
  return scales;
}

DenseBlockSpec ModelConfig::encoder_block(int index) const {
  const auto i = static_cast<std::size_t>(index);
  DenseBlockSpec spec;
  spec.growth = growth;
  spec.in_channels = encoder_widths.at(i);
  spec.dilations = encoder_dilations.at(i);
  spec.layers = static_cast<int>(spec.dilations.size());
  if (!use_dilations) std::fill(spec.dilations.begin(), spec.dilations.end(), 1);
  return spec;
}

DenseBlockSpec ModelConfig::bottleneck_block() const {
  DenseBlockSpec spec;
  spec.growth = growth;
  spec.in_channels = encoder_block(2).output_channels();
  spec.layers = bottleneck_layers;
  spec.dilations.assign(static_cast<std::size_t>(bottleneck_layers), 1);
  return spec;
}

LgcfSpec ModelConfig::lgcf_spec() const {
  LgcfSpec spec = LgcfSpec::standard(feature_channels(), lgcf_growth, fusion_width());
  spec.dense.dilations = lgcf_dilations;
  spec.dense.layers = static_cast<int>(lgcf_dilations.size());
  spec.pool_kernels = lgcf_pool_kernels;
  return spec;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw ConfigError(std::string("model config: ") + what + " must be >= 1");
  };
  positive(image_channels, "image_channels");
  positive(base_width, "base_width");
  positive(half_res_blocks, "half_res_blocks");
  positive(quarter_res_blocks, "quarter_res_blocks");
  positive(growth, "growth");
  positive(max_disparity, "max_disparity");
  positive(bottleneck_layers, "bottleneck_layers");
  if (encoder_widths.size() != 3 || encoder_dilations.size() != 3) {
    throw ConfigError("model config: exactly three encoder blocks are required");
  }
  for (const auto& d : encoder_dilations) {
    if (d.empty()) throw ConfigError("model config: empty encoder dilation schedule");
    for (int v : d) positive(v, "encoder dilation");
  }
  for (int w : encoder_widths) positive(w, "encoder width");
  if (decoder_widths.size() != decoder_scales().size()) {
    throw ConfigError("model config: need one decoder width per scale (" + std::to_string(decoder_scales().size()) + ")");
  }
  for (int w : decoder_widths) positive(w, "decoder width");
  if (refine_widths.size() != 3) throw ConfigError("model config: refinement needs exactly three widths");
  for (int w : refine_widths) positive(w, "refinement width");
  if (lgcf_dilations.empty() || lgcf_pool_kernels.empty()) throw ConfigError("model config: empty lgcf schedule");
  positive(lgcf_growth, "lgcf_growth");
  if (lgcf_fusion_width < 0) throw ConfigError("model config: lgcf_fusion_width must be >= 0");
  if (!(disparity_scale > 0)) throw ConfigError("model config: disparity_scale must be positive");
}

void ModelConfig::write(KvConfig& kv, const std::string& p) const {
  kv.set(p + "image_channels", std::to_string(image_channels));
  kv.set(p + "base_width", std::to_string(base_width));
  kv.set(p + "half_res_blocks", std::to_string(half_res_blocks));
  kv.set(p + "quarter_res_blocks", std::to_string(quarter_res_blocks));
  kv.set(p + "growth", std::to_string(growth));
  kv.set(p + "max_disparity", std::to_string(max_disparity));
  kv.set(p + "encoder_widths", join_ints(encoder_widths));
  kv.set(p + "encoder_dilations", join_int_lists(encoder_dilations));
  kv.set(p + "bottleneck_layers", std::to_string(bottleneck_layers));
  kv.set(p + "decoder_widths", join_ints(decoder_widths));
  kv.set(p + "lgcf_dilations", join_ints(lgcf_dilations));
  kv.set(p + "lgcf_pool_kernels", join_ints(lgcf_pool_kernels));
  kv.set(p + "lgcf_growth", std::to_string(lgcf_growth));
  kv.set(p + "lgcf_fusion_width", std::to_string(lgcf_fusion_width));
  kv.set(p + "refine_widths", join_ints(refine_widths));
  kv.set(p + "disparity_scale", format_double(disparity_scale));
  kv.set(p + "use_dilations", use_dilations ? "true" : "false");
  kv.set(p + "use_lgcf", use_lgcf ? "true" : "false");
  kv.set(p + "use_refinement", use_refinement ? "true" : "false");
  kv.set(p + "seed", std::to_string(seed));
}

ModelConfig ModelConfig::read(const KvConfig& kv, const std::string& p) {
  ModelConfig c;
  if (kv.has(p + "variant")) c = ablation(kv.get_string(p + "variant", "full"), c);
  auto geti = [&](const char* key, int fallback) { return static_cast<int>(kv.get_int(p + key, fallback)); };
  c.image_channels = geti("image_channels", c.image_channels);
  c.base_width = geti("base_width", c.base_width);
  c.half_res_blocks = geti("half_res_blocks", c.half_res_blocks);
  c.quarter_res_blocks = geti("quarter_res_blocks", c.quarter_res_blocks);
  c.growth = geti("growth", c.growth);
  c.max_disparity = geti("max_disparity", c.max_disparity);
  c.encoder_widths = kv.get_int_list(p + "encoder_widths", c.encoder_widths);
  c.encoder_dilations = kv.get_int_lists(p + "encoder_dilations", c.encoder_dilations);
  c.bottleneck_layers = geti("bottleneck_layers", c.bottleneck_layers);
  c.decoder_widths = kv.get_int_list(p + "decoder_widths", c.decoder_widths);
  c.lgcf_dilations = kv.get_int_list(p + "lgcf_dilations", c.lgcf_dilations);
  c.lgcf_pool_kernels = kv.get_int_list(p + "lgcf_pool_kernels", c.lgcf_pool_kernels);
  c.lgcf_growth = geti("lgcf_growth", c.lgcf_growth);
  c.lgcf_fusion_width = geti("lgcf_fusion_width", c.lgcf_fusion_width);
  c.refine_widths = kv.get_int_list(p + "refine_widths", c.refine_widths);
  c.disparity_scale = kv.get_double(p + "disparity_scale", c.disparity_scale);
  c.use_dilations = kv.get_bool(p + "use_dilations", c.use_dilations);
  c.use_lgcf = kv.get_bool(p + "use_lgcf", c.use_lgcf);
  c.use_refinement = kv.get_bool(p + "use_refinement", c.use_refinement);
  c.seed = static_cast<std::uint64_t>(kv.get_int(p + "seed", static_cast<std::int64_t>(c.seed)));
  c.validate();
  return c;
}

ModelConfig ModelConfig::ablation(const std::string& variant, ModelConfig base) {
  if (variant == "baseline") {
    base.use_dilations = base.use_lgcf = base.use_refinement = false;
  } else if (variant == "dilations") {
    base.use_dilations = true;
    base.use_lgcf = base.use_refinement = false;
  } else if (variant == "context") {
    base.use_dilations = base.use_lgcf = true;
    base.use_refinement = false;
  } else if (variant == "full") {
    base.use_dilations = base.use_lgcf = base.use_refinement = true;
  } else {
    throw ConfigError("unknown model variant '" + variant + "' (baseline|dilations|context|full)");
  }
  return base;
}

ModelConfig ModelConfig::ablation(const std::string& variant) { return ablation(variant, ModelConfig{}); }

void check_input_dims(std::int64_t height, std::int64_t width) {
  if (height % 16 != 0 || width % 16 != 0 || height < 16 || width < 16) {
    throw ConfigError("input " + std::to_string(height) + "x" + std::to_string(width) +
                      " must be a positive multiple of 16 in both dimensions; pad or crop the pair (--auto-pad)");
  }
}

// ---- Parameters -------------------------------------------------------------

ParamStore DiscoModel::init_params(const ModelConfig& c) {
  c.validate();
  ParamStore store;
  std::mt19937_64 rng(c.seed);
  ParamBuilder root(store, rng);

  // Declaration order keeps parameters shared between ablation variants identical.
  const ParamBuilder feat = root.sub("feat");
  feat.sub("stem").conv(ConvSpec::same(c.image_channels, c.base_width, 3, 1, 2));
  for (int i = 1; i <= c.half_res_blocks; ++i) declare_residual(feat.sub(indexed("half", i)), c.base_width, c.base_width, 1);
  for (int i = 1; i <= c.quarter_res_blocks; ++i) {
    declare_residual(feat.sub(indexed("quarter", i)), i == 1 ? c.base_width : c.feature_channels(), c.feature_channels(),
                     i == 1 ? 2 : 1);
  }

  const ParamBuilder estim = root.sub("estim");
  int channels = c.max_disparity + c.feature_channels();
  for (int i = 0; i < 3; ++i) {
    const DenseBlockSpec block = c.encoder_block(i);
    const ParamBuilder enc = estim.sub(indexed("enc", i + 1));
    enc.sub("entry").conv(ConvSpec::same(channels, block.in_channels, 3, 1, i == 0 ? 1 : 2));
    declare_dense_block(enc.sub("dense"), block);
    channels = block.output_channels();
  }
  declare_dense_block(estim.sub("bottleneck").sub("dense"), c.bottleneck_block());
  for (std::size_t i = 0; i < ModelConfig::decoder_scales().size(); ++i) {
    const ParamBuilder dec = estim.sub(indexed("dec", i));
    const int width = c.decoder_widths[i];
    dec.sub("conv1").conv(ConvSpec::same(decoder_input_channels(c, i), width));
    dec.sub("conv2").conv(ConvSpec::same(width, width));
    dec.sub("head").conv(ConvSpec::same(width, 1, 1), kHeadGain);
  }

  if (c.use_lgcf) declare_lgcf(root.sub("cost").sub("lgcf"), c.lgcf_spec());

  if (c.use_refinement) {
    const ParamBuilder ref = root.sub("refine");
    const auto& w = c.refine_widths;
    ref.sub("conv1").conv(ConvSpec::same(1 + 2 * c.feature_channels(), w[0], 3, 1, 2));
    ref.sub("conv2").conv(ConvSpec::same(w[0], w[1], 3, 1, 2));
    ref.sub("conv3").conv(ConvSpec::same(w[1], w[2], 3, 1, 2));
    ref.sub("deconv1").deconv(up2(w[2], w[1]));
    ref.sub("deconv2").deconv(up2(2 * w[1], w[0]));
    ref.sub("deconv3").deconv(up2(2 * w[0], 1), kHeadGain);
  }
  return store;
}

DiscoModel::DiscoModel(ModelConfig config) : config_(std::move(config)), params_(init_params(config_)) {}

DiscoModel::DiscoModel(ModelConfig config, ParamStore params) : config_(std::move(config)), params_(std::move(params)) {
  const ParamStore reference = init_params(config_);
  for (const auto& [path, tensor] : reference.all()) {
    if (!params_.contains(path)) throw ConfigError("parameter set is missing '" + path + "' required by the config");
    if (params_.get(path).shape() != tensor.shape()) {
      throw ShapeError("parameter '" + path + "' has shape " + shape_str(params_.get(path).shape()) +
                       ", config expects " + shape_str(tensor.shape()));
    }
  }
  if (params_.size() != reference.size()) {
    for (const auto& [path, _] : params_.all()) {
      if (!reference.contains(path)) throw ConfigError("parameter '" + path + "' is not part of the configured model");
    }
  }
}

// ---- Subnetworks ------------------------------------------------------------

Var DiscoModel::residual_block(const ParamScope& s, Var x, int in_channels, int out_channels, int stride) {
  Var h = s.sub("conv1").conv(ops::elu(x), ConvSpec::same(in_channels, out_channels, 3, 1, stride));
  h = s.sub("conv2").conv(ops::elu(h), ConvSpec::same(out_channels, out_channels));
  Var shortcut = (in_channels != out_channels || stride != 1)
                     ? s.sub("proj").conv(x, ConvSpec::same(in_channels, out_channels, 1, 1, stride))
                     : x;
  return ops::add(shortcut, h);
}

FeatureMaps DiscoModel::feature_extract(const ParamScope& scope, Var left, Var right) const {
  const ModelConfig& c = config_;
  const ParamScope feat = scope.sub("feat");
  auto tower = [&](Var image, bool keep_half) -> std::pair<Var, Var> {
    Var x = feat.sub("stem").conv(image, ConvSpec::same(c.image_channels, c.base_width, 3, 1, 2));
    for (int i = 1; i <= c.half_res_blocks; ++i) {
      x = residual_block(feat.sub(indexed("half", i)), x, c.base_width, c.base_width, 1);
    }
    Var half = keep_half ? x : Var{};
    for (int i = 1; i <= c.quarter_res_blocks; ++i) {
      x = residual_block(feat.sub(indexed("quarter", i)), x, i == 1 ? c.base_width : c.feature_channels(),
                         c.feature_channels(), i == 1 ? 2 : 1);
    }
    return {half, x};
  };
  auto [left_half, left_quarter] = tower(left, true);
  auto [unused, right_quarter] = tower(right, false);
  (void)unused;
  return {left_half, left_quarter, right_quarter};
}

Var DiscoModel::build_cost_volume(const ParamScope& scope, const FeatureMaps& f) const {
  const CorrelationSpec corr{config_.max_disparity};
  Var cost = config_.use_lgcf ? lgcf(scope.sub("cost").sub("lgcf"), f.left_quarter, f.right_quarter, config_.lgcf_spec(), corr)
                              : correlation(f.left_quarter, f.right_quarter, corr);
  return ops::concat_channels({cost, f.left_quarter});
}

std::vector<Var> DiscoModel::estimate_disparity(const ParamScope& scope, Var cost_input, const FeatureMaps& f) const {
  const ModelConfig& c = config_;
  const ParamScope estim = scope.sub("estim");
  const int expected = c.max_disparity + c.feature_channels();
  if (cost_input.dim(1) != expected) {
    throw ConfigError("estimation input has " + std::to_string(cost_input.dim(1)) + " channels, expected " +
                      std::to_string(expected));
  }

  std::vector<Var> encoded;
  Var x = cost_input;
  int channels = expected;
  for (int i = 0; i < 3; ++i) {
    const DenseBlockSpec block = c.encoder_block(i);
    const ParamScope enc = estim.sub(indexed("enc", i + 1));
    x = enc.sub("entry").conv(x, ConvSpec::same(channels, block.in_channels, 3, 1, i == 0 ? 1 : 2));
    x = dense_block(enc.sub("dense"), x, block);
    channels = block.output_channels();
    encoded.push_back(x);
  }
  x = dense_block(estim.sub("bottleneck").sub("dense"), x, c.bottleneck_block());

  const auto gain = static_cast<Real>(c.disparity_scale);
  const auto inv_scale = static_cast<Real>(1.0 / c.disparity_scale);
  std::vector<Var> disparities;
  Var features;
  for (std::size_t i = 0; i < ModelConfig::decoder_scales().size(); ++i) {
    const ParamScope dec = estim.sub(indexed("dec", i));
    Var in = x;
    if (i > 0) {
      Var skip;
      switch (i) {
        case 1: skip = encoded[1]; break;
        case 2: skip = encoded[0]; break;
        case 3: skip = f.left_half; break;
        default: skip = ops::upsample_bilinear(f.left_half, 2); break;
      }
      in = ops::concat_channels({ops::upsample_bilinear(features, 2), skip,
                                 ops::upsample_bilinear(ops::scale(disparities.back(), inv_scale), 2)});
    }
    const int width = c.decoder_widths[i];
    Var h = ops::elu(dec.sub("conv1").conv(in, ConvSpec::same(decoder_input_channels(c, i), width)));
    h = ops::elu(dec.sub("conv2").conv(h, ConvSpec::same(width, width)));
    features = h;
    Var head = ops::scale(dec.sub("head").conv(h, ConvSpec::same(width, 1, 1)), gain);
    // Coarse-to-fine: finer scales predict a residual over the upsampled coarser map.
    disparities.push_back(i == 0 ? head : ops::add(ops::upsample_bilinear(disparities.back(), 2), head));
  }
  return disparities;
}

Var DiscoModel::refine_disparity(const ParamScope& scope, Var disparity, const FeatureMaps& f) const {
  const ModelConfig& c = config_;
  const ParamScope ref = scope.sub("refine");
  const std::int64_t h = disparity.dim(2), w = disparity.dim(3);
  Var left_up = ops::resize_bilinear(f.left_quarter, h, w);
  Var right_up = ops::resize_bilinear(f.right_quarter, h, w);
  // Feature reconstruction error: left features minus right features warped by the estimate.
  Var error = ops::sub(left_up, warp_horizontal(right_up, disparity));
  Var in = ops::concat_channels({ops::scale(disparity, static_cast<Real>(1.0 / c.disparity_scale)), error, left_up});

  const auto& rw = c.refine_widths;
  Var e1 = ops::elu(ref.sub("conv1").conv(in, ConvSpec::same(1 + 2 * c.feature_channels(), rw[0], 3, 1, 2)));
  Var e2 = ops::elu(ref.sub("conv2").conv(e1, ConvSpec::same(rw[0], rw[1], 3, 1, 2)));
  Var e3 = ops::elu(ref.sub("conv3").conv(e2, ConvSpec::same(rw[1], rw[2], 3, 1, 2)));
  Var d1 = ops::elu(ref.sub("deconv1").deconv(e3, up2(rw[2], rw[1])));
  Var d2 = ops::elu(ref.sub("deconv2").deconv(ops::concat_channels({d1, e2}), up2(2 * rw[1], rw[0])));
  Var residual = ref.sub("deconv3").deconv(ops::concat_channels({d2, e1}), up2(2 * rw[0], 1));
  residual = ops::scale(residual, static_cast<Real>(c.disparity_scale));
  return ops::add(disparity, residual);
}

ModelOutput DiscoModel::forward(Graph& graph, const Tensor& left, const Tensor& right) const {
  const auto start = std::chrono::steady_clock::now();
  require_rank(left, 4, "left image");
  if (left.shape() != right.shape()) {
    throw ShapeError("left " + shape_str(left.shape()) + " and right " + shape_str(right.shape()) + " differ");
  }
  if (left.dim(1) != config_.image_channels) {
    throw ConfigError("model expects " + std::to_string(config_.image_channels) + " image channels, got " +
                      std::to_string(left.dim(1)));
  }
  check_input_dims(left.dim(2), left.dim(3));

  const ParamScope root(graph, params_);
  Var lv = graph.constant(center_intensities(left));
  Var rv = graph.constant(center_intensities(right));
  ModelOutput out;
  const FeatureMaps features = annotate("feature extraction", [&] { return feature_extract(root, lv, rv); });
  Var cost_input = annotate("cost volume", [&] { return build_cost_volume(root, features); });
  out.cost_volume = annotate("cost volume", [&] { return ops::slice_channels(cost_input, 0, config_.max_disparity); });

  std::int64_t min_h = std::numeric_limits<std::int64_t>::max(), min_w = min_h;
  graph.set_observer([&](const std::string& op, const Tensor& value) {
    if (value.rank() != 4 || op.rfind("param:", 0) == 0 || op == "constant" || op == "leaf") return;
    min_h = std::min(min_h, value.dim(2));
    min_w = std::min(min_w, value.dim(3));
  });
  try {
    out.disparities = annotate("disparity estimation", [&] { return estimate_disparity(root, cost_input, features); });
  } catch (...) {
    graph.set_observer(nullptr);
    throw;
  }
  graph.set_observer(nullptr);
  out.estimation_min_height = min_h;
  out.estimation_min_width = min_w;

  if (config_.use_refinement) {
    out.refined = annotate("refinement", [&] { return refine_disparity(root, out.disparities.back(), features); });
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace disco::inline DISCO_ABI
