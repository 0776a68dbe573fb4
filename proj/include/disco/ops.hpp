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
#include <vector>

#include "disco/config.hpp"
#include "disco/graph.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// Square convolution geometry. Kernels are odd so "same" padding is exact.
struct ConvSpec {
  int kernel = 3;
  int dilation = 1;
  int stride = 1;
  int pad = 0;
  int in_channels = 0;
  int out_channels = 0;

  // Extent of input covered by one tap pattern: (k-1)(d-1)+k.
  int receptive_field() const { return (kernel - 1) * (dilation - 1) + kernel; }

  // Zero "same" padding: pad = rC/2 rounded down.
  static ConvSpec same(int in_channels, int out_channels, int kernel = 3, int dilation = 1, int stride = 1);

  void validate() const;
};

std::int64_t conv_output_size(std::int64_t in, const ConvSpec& spec);

// Transposed convolution. Weight layout is [Cin, Cout, k, k].
struct DeconvSpec {
  int kernel = 4;
  int stride = 2;
  int pad = 1;
  int output_padding = 0;
  int in_channels = 0;
  int out_channels = 0;

  void validate() const;
};

std::int64_t deconv_output_size(std::int64_t in, const DeconvSpec& spec);

namespace ops {

// Weight layout [Cout, Cin, k, k]; `bias` may be a default-constructed Var.
Var conv2d(Var input, Var weight, Var bias, const ConvSpec& spec);
Var deconv2d(Var input, Var weight, Var bias, const DeconvSpec& spec);

// x for x >= 0, alpha (e^x - 1) otherwise. Slope at 0 is taken from the linear branch.
Var elu(Var x, Real alpha = Real(1));

// Window maximum without padding; backward routes to the first row-major maximum.
Var maxpool2d(Var input, int kernel, int stride);

// Half-pixel-centre (align_corners = false) bilinear resampling.
Var upsample_bilinear(Var input, int factor);
Var resize_bilinear(Var input, std::int64_t out_h, std::int64_t out_w);

Var concat_channels(const std::vector<Var>& inputs);
Var slice_channels(Var input, std::int64_t begin, std::int64_t end);

// Zero-pads on the bottom and right edges.
Var pad_bottom_right(Var input, std::int64_t bottom, std::int64_t right);
Var crop(Var input, std::int64_t y0, std::int64_t x0, std::int64_t h, std::int64_t w);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, Real s);
Var sum(Var a);
Var mean(Var a);
// sum_i a_i * w_i against a constant weight tensor.
Var weighted_sum(Var a, const Tensor& weights);

}  // namespace ops

namespace testing {
// Adds a constant to every conv2d weight gradient. Only used to prove the
// gradient checker detects corrupted backward passes.
void set_conv_weight_grad_offset(Real offset);
}  // namespace testing

}  // namespace disco::inline DISCO_ABI
