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

#include <vector>

#include "disco/config.hpp"
#include "disco/graph.hpp"
#include "disco/ops.hpp"
#include "disco/params.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// ---- Receptive-field calculus -------------------------------------------

// (k-1)(d-1)+k for a single kernel.
int receptive_field(int kernel, int dilation);
int receptive_field(const ConvSpec& spec);

// Unit-stride stack: sum of per-layer fields minus (n-1).
int stacked_receptive_field(const std::vector<ConvSpec>& specs);

// ---- Dense block ----------------------------------------------------------

// l layers of ELU -> 3x3 conv, each producing `growth` maps from the
// concatenation of the block input and every earlier layer output.
struct DenseBlockSpec {
  int layers = 4;
  int growth = 8;
  int in_channels = 16;
  std::vector<int> dilations{1, 1, 1, 1};
  int kernel = 3;

  // Channels entering layer i (1-indexed): g0 + (i-1) g.
  int layer_input_channels(int i) const { return in_channels + (i - 1) * growth; }
  // Block output keeps the input: g0 + l g.
  int output_channels() const { return in_channels + layers * growth; }

  std::vector<ConvSpec> conv_specs() const;
  void validate() const;
};

void declare_dense_block(const ParamBuilder& b, const DenseBlockSpec& spec);
Var dense_block(const ParamScope& s, Var input, const DenseBlockSpec& spec);

// ---- Correlation ----------------------------------------------------------

// Left-view convention: left pixel x is compared against right pixel x - d.
struct CorrelationSpec {
  int max_disparity = 16;
};

// out[n,d,y,x] = (1/C) sum_c left[n,c,y,x] * right[n,c,y,x-d], d in [0, D_max);
// right positions left of the image contribute zero.
Var correlation(Var left, Var right, const CorrelationSpec& spec);

// Zero-mean, unit-norm (2r+1)^2 * C patch descriptors per pixel. Used as
// parameter-free "identity" features for matching raw intensities; a flat
// patch yields a zero descriptor.
Tensor patch_features(const Tensor& image, int radius);

// ---- Warping --------------------------------------------------------------

// out[n,c,y,x] = source sampled at (x - disparity[n,0,y,x], y) with linear
// interpolation along x; samples outside the image read as zero.
Var warp_horizontal(Var source, Var disparity);

// ---- Spatial pyramid pooling ---------------------------------------------

// For each kernel s: zero-pad to a multiple of s, max-pool (s, s), bilinearly
// restore to the padded size and crop back. Branches concatenate on channels.
Var spp(Var input, const std::vector<int>& pool_kernels);

// ---- Local and global context fusion -------------------------------------

struct LgcfSpec {
  DenseBlockSpec dense;
  std::vector<int> pool_kernels{8, 16, 32, 64};
  int feature_channels = 32;
  int fusion_channels = 32;

  static LgcfSpec standard(int feature_channels, int growth, int fusion_channels);
  int concat_channels() const;
  void validate() const;
};

void declare_lgcf(const ParamBuilder& b, const LgcfSpec& spec);
// concat(features, dense(features), spp(features)) -> 1x1 conv.
Var lgcf_fuse(const ParamScope& s, Var features, const LgcfSpec& spec);
// Siamese fusion of both views followed by correlation.
Var lgcf(const ParamScope& s, Var left, Var right, const LgcfSpec& spec, const CorrelationSpec& corr);

}  // namespace disco::inline DISCO_ABI
