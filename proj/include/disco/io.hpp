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

#include <string>
#include <string_view>
#include <vector>

#include "disco/config.hpp"
#include "disco/tensor.hpp"

namespace disco::inline DISCO_ABI {

// PFM: "Pf" (1 channel) or "PF" (3 channels), "W H", then a scale whose sign
// selects the byte order (negative = little-endian). Rows are stored bottom to
// top as 32-bit floats; in memory the tensor is [C, H, W] top to bottom.
struct PfmImage {
  Tensor data;
  float scale = -1.0f;
};

PfmImage parse_pfm(std::string_view bytes, const std::string& origin = "<memory>");
PfmImage read_pfm(const std::string& path);
// Byte order follows the sign of `scale`; its magnitude is stored verbatim.
std::string encode_pfm(const Tensor& chw, float scale = -1.0f);
void write_pfm(const std::string& path, const Tensor& chw, float scale = -1.0f);

// 8-bit binary netpbm rasters: "P5" grayscale or "P6" RGB, then width,
// height and maxval 255, one whitespace byte, then raw row-major bytes.
// Intensities map to [0, 1].
Tensor parse_image(std::string_view bytes, const std::string& origin = "<memory>");
Tensor read_image(const std::string& path);
std::string encode_image(const Tensor& chw);
void write_image(const std::string& path, const Tensor& chw);

// One sample per line, tab-separated: left image, right image, gt PFM.
// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
  std::string left, right, gt;
};
std::vector<ManifestEntry> read_manifest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace disco::inline DISCO_ABI
