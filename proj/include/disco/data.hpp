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

#include "disco/config.hpp"
#include "disco/kv_config.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// Rectified pair with dense left-view ground truth. left/right are [C,H,W] in
// [0,1]; gt and mask are [1,H,W], the mask holding 1 where gt is usable.
struct StereoSample {
  Tensor left;
  Tensor right;
  Tensor gt;
  Tensor mask;

  std::int64_t channels() const { return left.dim(0); }
  std::int64_t height() const { return left.dim(1); }
  std::int64_t width() const { return left.dim(2); }
  void validate() const;
};

enum class RdsLayout { kConstant, kLayered, kRamp, kMixed };

RdsLayout parse_layout(const std::string& name);
std::string layout_name(RdsLayout layout);

// Random-dot stereogram generator settings.
struct RdsConfig {
  int height = 64;
  int width = 128;
  int channels = 1;
  // Fraction of texels carrying a random dot; the rest take the background level.
  double density = 0.5;
  // Side of one square texel in pixels.
  int dot_size = 1;
  double background = 0.5;
  RdsLayout layout = RdsLayout::kLayered;
  // Exclusive upper bound of ground-truth disparities, in pixels.
  double max_disparity = 24;
  // Constant layout: fixed disparity, or < 0 to draw one per sample.
  double constant_disparity = -1;
  // Layered layout: foreground rectangles drawn over a background plane.
  int layers = 3;
  // Layered and constant layouts: round disparities to whole pixels.
  bool integer_disparity = true;
  // Mark pixels hidden in the right view as invalid.
  bool occlusion = true;
  std::uint64_t seed = 0;

  void validate() const;
  void write(KvConfig& kv, const std::string& prefix = "rds.") const;
  static RdsConfig read(const KvConfig& kv, const std::string& prefix = "rds.");
};

// The right view is the dot texture; the left view resamples it at x - gt(x)
// with linear interpolation, so warping the right view by gt reproduces the
// left view on every valid pixel. Left pixels with no visible match (off the
// image or hidden behind a nearer surface) receive fresh dots and mask 0.
StereoSample generate_rds(const RdsConfig& config);

// Photometric and geometric augmentation applied identically to both views.
struct AugmentConfig {
  // Crop target; 0 keeps the full extent.
  int crop_height = 0;
  int crop_width = 0;
  double brightness_min = 0.8, brightness_max = 1.2;
  double gamma_min = 0.8, gamma_max = 1.2;
  double color_min = 0.9, color_max = 1.1;
  bool enabled = false;

  static AugmentConfig identity() { return {}; }
  void validate() const;
  void write(KvConfig& kv, const std::string& prefix = "augment.") const;
  static AugmentConfig read(const KvConfig& kv, const std::string& prefix = "augment.");
};

struct PhotometricParams {
  double brightness = 1;
  double gamma = 1;
  std::vector<double> color{1, 1, 1};
};

StereoSample crop(const StereoSample& sample, std::int64_t y0, std::int64_t x0, std::int64_t h, std::int64_t w);
// v -> clamp((v * brightness)^gamma * color[c], 0, 1), same for both views.
StereoSample apply_photometric(const StereoSample& sample, const PhotometricParams& p);
StereoSample augment(const StereoSample& sample, const AugmentConfig& config, std::uint64_t seed);

// Stateless 64-bit mixing used to derive per-sample seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace disco::inline DISCO_ABI
