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

#include "disco/loss.hpp"

#include <cmath>

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

namespace {

std::int64_t count_valid(const Tensor& mask) {
  std::int64_t n = 0;
  for (Real m : mask.data()) n += m > Real(0.5) ? 1 : 0;
  return n;
}

void check_loss_inputs(const Tensor& prediction, const Tensor& target, const Tensor& mask) {
  if (prediction.shape() != target.shape() || prediction.shape() != mask.shape()) {
    throw ShapeError("huber_loss: prediction " + shape_str(prediction.shape()) + ", target " +
                     shape_str(target.shape()) + ", mask " + shape_str(mask.shape()) + " must agree");
  }
}

}  // namespace

double huber_value(const Tensor& prediction, const Tensor& target, const Tensor& mask) {
  check_loss_inputs(prediction, target, mask);
  const std::int64_t valid = count_valid(mask);
  if (valid == 0) throw DataError("huber_loss: degenerate input, mask has no valid pixels");
  double acc = 0;
  for (std::int64_t i = 0; i < prediction.size(); ++i) {
    if (mask[i] <= Real(0.5)) continue;
    const double t = static_cast<double>(prediction[i]) - static_cast<double>(target[i]);
    const double a = std::abs(t);
    acc += a < 1.0 ? 0.5 * t * t : a - 0.5;
  }
  return acc / static_cast<double>(valid);
}

Var huber_loss(Var prediction, const Tensor& target, const Tensor& mask) {
  const double value = huber_value(prediction.value(), target, mask);
  const Real inv_count = Real(1) / static_cast<Real>(count_valid(mask));
  return prediction.graph().record(
      "huber_loss", Tensor::scalar(static_cast<Real>(value)), {prediction},
      [prediction, target, mask, inv_count](Graph& g, const Tensor& gout) {
        if (!g.requires_grad(prediction)) return;
        Tensor& gp = g.grad_buffer(prediction.id());
        const Tensor& p = prediction.value();
        for (std::int64_t i = 0; i < p.size(); ++i) {
          if (mask[i] <= Real(0.5)) continue;
          const Real t = p[i] - target[i];
          // Derivative t inside the unit band, sign(t) outside; both equal +-1 at |t| = 1.
          const Real d = std::abs(t) < Real(1) ? t : (t > 0 ? Real(1) : Real(-1));
          gp[i] += gout[0] * d * inv_count;
        }
      });
}

ScaledTarget downsample_target(const Tensor& disparity, const Tensor& mask, int factor) {
  require_rank(disparity, 4, "downsample_target disparity");
  if (disparity.shape() != mask.shape()) throw ShapeError("downsample_target: mask shape mismatch");
  if (factor == 1) return {disparity, mask};
  const std::int64_t n = disparity.dim(0), c = disparity.dim(1), h = disparity.dim(2), w = disparity.dim(3);
  if (factor < 1 || h % factor != 0 || w % factor != 0) {
    throw ShapeError("downsample_target: " + shape_str(disparity.shape()) + " not divisible by " + std::to_string(factor));
  }
  const std::int64_t oh = h / factor, ow = w / factor;
  ScaledTarget out{Tensor({n, c, oh, ow}), Tensor({n, c, oh, ow})};
  const std::int64_t window = static_cast<std::int64_t>(factor) * factor;
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      for (std::int64_t oy = 0; oy < oh; ++oy) {
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          double acc = 0;
          std::int64_t valid = 0;
          for (std::int64_t y = oy * factor; y < (oy + 1) * factor; ++y) {
            for (std::int64_t x = ox * factor; x < (ox + 1) * factor; ++x) {
              if (mask.at(b, ch, y, x) > Real(0.5)) {
                acc += disparity.at(b, ch, y, x);
                ++valid;
              }
            }
          }
          const bool ok = valid * 2 >= window;
          out.disparity.at(b, ch, oy, ox) = valid > 0 ? static_cast<Real>(acc / static_cast<double>(valid)) : Real(0);
          out.mask.at(b, ch, oy, ox) = ok ? Real(1) : Real(0);
        }
      }
    }
  }
  return out;
}

}  // namespace disco::inline DISCO_ABI
