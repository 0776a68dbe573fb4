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

#include "disco/detail/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>

namespace disco::inline DISCO_ABI::detail {

void im2col(const Real* img, const PatchGeometry& g, Real* col) {
  const std::int64_t plane = g.in_h * g.in_w;
  const std::int64_t ncols = g.cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    const Real* src = img + c * plane;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        Real* dst = col + ((c * g.kernel + ky) * g.kernel + kx) * ncols;
        const std::int64_t dx = static_cast<std::int64_t>(kx) * g.dilation - g.pad;
        // Valid ox range: 0 <= ox*s + dx < in_w.
        std::int64_t ox_lo = dx >= 0 ? 0 : (-dx + g.stride - 1) / g.stride;
        std::int64_t ox_hi = g.in_w - dx <= 0 ? 0 : (g.in_w - dx + g.stride - 1) / g.stride;
        ox_lo = std::min(ox_lo, g.out_w);
        ox_hi = std::clamp(ox_hi, ox_lo, g.out_w);
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          Real* row = dst + oy * g.out_w;
          const std::int64_t iy = oy * g.stride - g.pad + static_cast<std::int64_t>(ky) * g.dilation;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(row, row + g.out_w, Real(0));
            continue;
          }
          const Real* line = src + iy * g.in_w;
          std::fill(row, row + ox_lo, Real(0));
          if (g.stride == 1) {
            std::copy(line + ox_lo + dx, line + ox_hi + dx, row + ox_lo);
          } else {
            for (std::int64_t ox = ox_lo; ox < ox_hi; ++ox) row[ox] = line[ox * g.stride + dx];
          }
          std::fill(row + ox_hi, row + g.out_w, Real(0));
        }
      }
    }
  }
}

void col2im(const Real* col, const PatchGeometry& g, Real* img) {
  const std::int64_t plane = g.in_h * g.in_w;
  const std::int64_t ncols = g.cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    Real* dst = img + c * plane;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const Real* src = col + ((c * g.kernel + ky) * g.kernel + kx) * ncols;
        const std::int64_t dx = static_cast<std::int64_t>(kx) * g.dilation - g.pad;
        std::int64_t ox_lo = dx >= 0 ? 0 : (-dx + g.stride - 1) / g.stride;
        std::int64_t ox_hi = g.in_w - dx <= 0 ? 0 : (g.in_w - dx + g.stride - 1) / g.stride;
        ox_lo = std::min(ox_lo, g.out_w);
        ox_hi = std::clamp(ox_hi, ox_lo, g.out_w);
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + static_cast<std::int64_t>(ky) * g.dilation;
          if (iy < 0 || iy >= g.in_h) continue;
          const Real* row = src + oy * g.out_w;
          Real* line = dst + iy * g.in_w;
          for (std::int64_t ox = ox_lo; ox < ox_hi; ++ox) line[ox * g.stride + dx] += row[ox];
        }
      }
    }
  }
}

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, const Real* a, const Real* b,
          Real* c, bool accumulate) {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<const Mat>;
  Eigen::Map<Mat> cm(c, m, n);
  CMap am(a, trans_a ? k : m, trans_a ? m : k);
  CMap bm(b, trans_b ? n : k, trans_b ? k : n);
  if (!accumulate) cm.setZero();
  if (!trans_a && !trans_b) {
    cm.noalias() += am * bm;
  } else if (trans_a && !trans_b) {
    cm.noalias() += am.transpose() * bm;
  } else if (!trans_a && trans_b) {
    cm.noalias() += am * bm.transpose();
  } else {
    cm.noalias() += am.transpose() * bm.transpose();
  }
}

}  // namespace disco::inline DISCO_ABI::detail
