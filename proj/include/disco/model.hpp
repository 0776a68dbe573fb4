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
#include <string>
#include <vector>

#include "disco/blocks.hpp"
#include "disco/config.hpp"
#include "disco/graph.hpp"
#include "disco/kv_config.hpp"
#include "disco/params.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// Every architectural knob. Widths are desk-scale defaults; nothing below is
// hard-coded in the network builder.
struct ModelConfig {
  int image_channels = 1;
  // 1/2-scale feature width; the 1/4-scale width is twice this.
  int base_width = 16;
  int half_res_blocks = 4;
  int quarter_res_blocks = 8;
  int growth = 8;
  // Cost-volume levels at 1/4 resolution (levels 0 .. max_disparity-1).
  int max_disparity = 16;

  // Encoder: entry conv width and dilation schedule per block. Block 1 keeps
  // the 1/4 scale, blocks 2 and 3 halve it, so the deepest scale is 1/16.
  std::vector<int> encoder_widths{32, 48, 64};
  std::vector<std::vector<int>> encoder_dilations{{1, 3, 6, 8}, {1, 3, 6, 8}, {1, 3, 6, 8}};
  int bottleneck_layers = 2;
  // Decoder widths for scales 1/16, 1/8, 1/4, 1/2, 1.
  std::vector<int> decoder_widths{64, 48, 32, 16, 16};

  std::vector<int> lgcf_dilations{1, 3, 6, 12, 18, 24};
  std::vector<int> lgcf_pool_kernels{8, 16, 32, 64};
  int lgcf_growth = 8;
  // 0 means "same as the 1/4-scale feature width".
  int lgcf_fusion_width = 0;

  // Refinement encoder widths (three stride-2 convs); the decoder mirrors them.
  std::vector<int> refine_widths{16, 32, 32};
  // Disparity heads regress in units of this many pixels; values fed back
  // into later layers are divided by it.
  double disparity_scale = 8.0;

  bool use_dilations = true;
  bool use_lgcf = true;
  bool use_refinement = true;

  std::uint64_t seed = 1;

  int feature_channels() const { return 2 * base_width; }
  int fusion_width() const { return lgcf_fusion_width > 0 ? lgcf_fusion_width : feature_channels(); }
  // Denominators of the decoder scales, coarse to fine.
  static const std::vector<int>& decoder_scales();

  DenseBlockSpec encoder_block(int index) const;
  DenseBlockSpec bottleneck_block() const;
  LgcfSpec lgcf_spec() const;

  void validate() const;

  void write(KvConfig& kv, const std::string& prefix = "model.") const;
  static ModelConfig read(const KvConfig& kv, const std::string& prefix = "model.");

  // Ablation variants: "baseline", "dilations", "context", "full".
  static ModelConfig ablation(const std::string& variant, ModelConfig base);
  static ModelConfig ablation(const std::string& variant);
};

struct FeatureMaps {
  Var left_half;
  Var left_quarter;
  Var right_quarter;
};

struct ModelOutput {
  // Disparity maps (full-resolution pixel units) at scales 1/16 .. 1.
  std::vector<Var> disparities;
  // Full-resolution refined map; invalid when refinement is off.
  Var refined;
  Var cost_volume;
  // Smallest spatial size observed inside the estimation subnetwork.
  std::int64_t estimation_min_height = 0;
  std::int64_t estimation_min_width = 0;
  double seconds = 0;

  Var final_disparity() const { return refined.valid() ? refined : disparities.back(); }
};

class DiscoModel {
 public:
  explicit DiscoModel(ModelConfig config);
  DiscoModel(ModelConfig config, ParamStore params);

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  // Fresh seeded parameters for `config`.
  static ParamStore init_params(const ModelConfig& config);

  // left/right: [N, C, H, W] with H and W divisible by 16.
  ModelOutput forward(Graph& graph, const Tensor& left, const Tensor& right) const;

  FeatureMaps feature_extract(const ParamScope& scope, Var left, Var right) const;
  Var build_cost_volume(const ParamScope& scope, const FeatureMaps& features) const;
  std::vector<Var> estimate_disparity(const ParamScope& scope, Var cost_input, const FeatureMaps& features) const;
  Var refine_disparity(const ParamScope& scope, Var disparity, const FeatureMaps& features) const;

  // Residual block: shortcut(x) + conv2(elu(conv1(elu(x)))).
  static Var residual_block(const ParamScope& scope, Var x, int in_channels, int out_channels, int stride);

 private:
  ModelConfig config_;
  ParamStore params_;
};

void check_input_dims(std::int64_t height, std::int64_t width);

}  // namespace disco::inline DISCO_ABI
