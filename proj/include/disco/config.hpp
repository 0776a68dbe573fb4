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

// Precision variant selection. The library is compiled once per precision;
// each variant lives in its own inline namespace so both can be linked into
// the same executable (gradient checks run in double, training in single).

#if defined(DISCO_DOUBLE)
#define DISCO_ABI f64
#else
#define DISCO_ABI f32
#endif

namespace disco::inline DISCO_ABI {

#if defined(DISCO_DOUBLE)
using Real = double;
inline constexpr const char* kPrecisionName = "double";
#else
using Real = float;
inline constexpr const char* kPrecisionName = "single";
#endif

}  // namespace disco::inline DISCO_ABI
