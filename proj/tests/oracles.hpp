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

// Brute-force reference implementations. They share no code with the library
// kernels (no im2col, no GEMM) and exist only to check them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "disco/ops.hpp"
#include "disco/tensor.hpp"

namespace disco::oracle {

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& s) {
  const auto n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3), cout = w.dim(0);
  const auto rf = (s.kernel - 1) * (s.dilation - 1) + s.kernel;
  const auto oh = (h + 2 * s.pad - rf) / s.stride + 1, ow = (wd + 2 * s.pad - rf) / s.stride + 1;
  Tensor out({n, cout, oh, ow});
  for (std::int64_t bi = 0; bi < n; ++bi)
    for (std::int64_t co = 0; co < cout; ++co)
      for (std::int64_t oy = 0; oy < oh; ++oy)
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          double acc = b.empty() ? 0.0 : b[co];
          for (std::int64_t ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < s.kernel; ++ky)
              for (int kx = 0; kx < s.kernel; ++kx) {
                const auto iy = oy * s.stride - s.pad + ky * s.dilation;
                const auto ix = ox * s.stride - s.pad + kx * s.dilation;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += x.at(bi, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          out.at(bi, co, oy, ox) = static_cast<Real>(acc);
        }
  return out;
}

// Scatter-add definition of the transposed convolution.
inline Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor& b, const DeconvSpec& s) {
  const auto n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3), cout = w.dim(1);
  const auto oh = (h - 1) * s.stride - 2 * s.pad + s.kernel + s.output_padding;
  const auto ow = (wd - 1) * s.stride - 2 * s.pad + s.kernel + s.output_padding;
  Tensor out({n, cout, oh, ow});
  for (std::int64_t bi = 0; bi < n; ++bi)
    for (std::int64_t ci = 0; ci < cin; ++ci)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t xx = 0; xx < wd; ++xx)
          for (std::int64_t co = 0; co < cout; ++co)
            for (int ky = 0; ky < s.kernel; ++ky)
              for (int kx = 0; kx < s.kernel; ++kx) {
                const auto oy = y * s.stride - s.pad + ky, ox = xx * s.stride - s.pad + kx;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                out.at(bi, co, oy, ox) += x.at(bi, ci, y, xx) * w.at(ci, co, ky, kx);
              }
  if (!b.empty())
    for (std::int64_t bi = 0; bi < n; ++bi)
      for (std::int64_t co = 0; co < cout; ++co)
        for (std::int64_t i = 0; i < oh * ow; ++i) out[(bi * cout + co) * oh * ow + i] += b[co];
  return out;
}

inline Tensor maxpool2d(const Tensor& x, int k, int s) {
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  Tensor out({n, c, oh, ow});
  for (std::int64_t bi = 0; bi < n; ++bi)
    for (std::int64_t ci = 0; ci < c; ++ci)
      for (std::int64_t oy = 0; oy < oh; ++oy)
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          Real best = -std::numeric_limits<Real>::infinity();
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) best = std::max(best, x.at(bi, ci, oy * s + ky, ox * s + kx));
          out.at(bi, ci, oy, ox) = best;
        }
  return out;
}

inline Tensor correlation(const Tensor& l, const Tensor& r, int dmax) {
  const auto n = l.dim(0), c = l.dim(1), h = l.dim(2), w = l.dim(3);
  Tensor out({n, dmax, h, w});
  for (std::int64_t bi = 0; bi < n; ++bi)
    for (int d = 0; d < dmax; ++d)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          if (x - d < 0) continue;
          double acc = 0;
          for (std::int64_t ci = 0; ci < c; ++ci) acc += l.at(bi, ci, y, x) * r.at(bi, ci, y, x - d);
          out.at(bi, d, y, x) = static_cast<Real>(acc / static_cast<double>(c));
        }
  return out;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : t.data()) v = static_cast<Real>(dist(rng));
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double m = 0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace disco::oracle
