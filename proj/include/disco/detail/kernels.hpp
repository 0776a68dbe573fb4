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

namespace disco::inline DISCO_ABI::detail {

// Geometry of one 2-D patch extraction (shared by conv and transposed conv).
struct PatchGeometry {
  std::int64_t channels, in_h, in_w, out_h, out_w;
  int kernel, dilation, stride, pad;

  std::int64_t rows() const { return channels * kernel * kernel; }
  std::int64_t cols() const { return out_h * out_w; }
};

// col[(c*k+ky)*k+kx, oy*out_w+ox] = img[c, oy*s-p+ky*d, ox*s-p+kx*d] (zero outside).
void im2col(const Real* img, const PatchGeometry& g, Real* col);
// Adjoint of im2col: accumulates columns back into the image.
void col2im(const Real* col, const PatchGeometry& g, Real* img);

// Row-major C[M,N] (+)= op(A) * op(B).
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, const Real* a, const Real* b,
          Real* c, bool accumulate);

}  // namespace disco::inline DISCO_ABI::detail
