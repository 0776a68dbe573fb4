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

#include "disco/config.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// Depth written where disparity is non-positive.
inline constexpr double kInvalidDepth = -1.0;

struct CameraParams {
  double focal = 0;     // pixels
  double baseline = 0;  // meters
  void validate() const;
};

// Mean |D - D_gt| over pixels with mask > 0.5. DataError on an empty mask.
double epe(const Tensor& prediction, const Tensor& target, const Tensor& mask);
// Percentage of valid pixels with |D - D_gt| strictly greater than 3.
double three_pixel_error(const Tensor& prediction, const Tensor& target, const Tensor& mask);
std::int64_t valid_count(const Tensor& mask);

struct DepthMap {
  Tensor depth;  // meters, kInvalidDepth where invalid
  Tensor valid;  // 1 where depth is meaningful
};

// z = f * B / disparity.
DepthMap disparity_to_depth(const Tensor& disparity, const CameraParams& camera);

}  // namespace disco::inline DISCO_ABI
