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

// Mean over valid pixels of 0.5 t^2 (|t| < 1) or |t| - 0.5, with t = D - D_gt.
// `mask` holds 1 for pixels with ground truth, 0 elsewhere. Throws DataError
// when no pixel is valid.
Var huber_loss(Var prediction, const Tensor& target, const Tensor& mask);

// Plain evaluation of the same loss without recording a graph.
double huber_value(const Tensor& prediction, const Tensor& target, const Tensor& mask);

// Average-pools a full-resolution [N,1,H,W] disparity over factor x factor
// windows using only valid pixels. Values stay in full-resolution pixel units.
// A coarse pixel is valid when at least half of its window is valid.
struct ScaledTarget {
  Tensor disparity;
  Tensor mask;
};
ScaledTarget downsample_target(const Tensor& disparity, const Tensor& mask, int factor);

}  // namespace disco::inline DISCO_ABI
