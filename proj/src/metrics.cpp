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

#include "disco/metrics.hpp"

#include <cmath>

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

namespace {

void check_shapes(const Tensor& p, const Tensor& t, const Tensor& m, const char* what) {
  if (p.shape() != t.shape() || p.shape() != m.shape()) {
    throw ShapeError(std::string(what) + ": prediction " + shape_str(p.shape()) + ", target " + shape_str(t.shape()) +
                     ", mask " + shape_str(m.shape()) + " must agree");
  }
}

}  // namespace

void CameraParams::validate() const {
  if (!(focal > 0) || !(baseline > 0)) throw ConfigError("camera focal length and baseline must be positive");
}

std::int64_t valid_count(const Tensor& mask) {
  std::int64_t n = 0;
  for (Real m : mask.data()) n += m > Real(0.5);
  return n;
}

double epe(const Tensor& prediction, const Tensor& target, const Tensor& mask) {
  check_shapes(prediction, target, mask, "epe");
  double sum = 0;
  std::int64_t n = 0;
  for (std::int64_t i = 0; i < prediction.size(); ++i) {
    if (mask[i] <= Real(0.5)) continue;
    sum += std::abs(static_cast<double>(prediction[i]) - static_cast<double>(target[i]));
    ++n;
  }
  if (n == 0) throw DataError("epe: degenerate input, mask has no valid pixel");
  return sum / static_cast<double>(n);
}

double three_pixel_error(const Tensor& prediction, const Tensor& target, const Tensor& mask) {
  check_shapes(prediction, target, mask, "three_pixel_error");
  std::int64_t bad = 0, n = 0;
  for (std::int64_t i = 0; i < prediction.size(); ++i) {
    if (mask[i] <= Real(0.5)) continue;
    bad += std::abs(static_cast<double>(prediction[i]) - static_cast<double>(target[i])) > 3.0;
    ++n;
  }
  if (n == 0) throw DataError("three_pixel_error: degenerate input, mask has no valid pixel");
  return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

DepthMap disparity_to_depth(const Tensor& disparity, const CameraParams& camera) {
  camera.validate();
  DepthMap out{Tensor(disparity.shape(), static_cast<Real>(kInvalidDepth)), Tensor::zeros(disparity.shape())};
  const double fb = camera.focal * camera.baseline;
  for (std::int64_t i = 0; i < disparity.size(); ++i) {
    const double d = disparity[i];
    if (!(d > 0)) continue;
    const double z = fb / d;
    if (!std::isfinite(z) || !std::isfinite(static_cast<Real>(z))) continue;
    out.depth[i] = static_cast<Real>(z);
    out.valid[i] = 1;
  }
  return out;
}

}  // namespace disco::inline DISCO_ABI
