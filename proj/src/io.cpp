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

#include "disco/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

namespace {

// Whitespace-separated header tokens; `pos` advances past each token.
class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  std::string_view token(const char* what) {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) fail(start, std::string("missing ") + what);
    return bytes_.substr(start, pos_ - start);
  }

  long long integer(const char* what) {
    const std::size_t at = skip_ws();
    const std::string_view t = token(what);
    long long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || v <= 0) {
      fail(at, std::string("invalid ") + what + " '" + std::string(t) + "'");
    }
    return v;
  }

  double real(const char* what) {
    const std::size_t at = skip_ws();
    const std::string t(token(what));
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) fail(at, std::string("invalid ") + what + " '" + t + "'");
    return v;
  }

  // Exactly one whitespace byte separates the header from the payload.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail(pos_, "expected a single whitespace byte before the payload");
    }
    return pos_ + 1;
  }

  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(std::size_t offset, const std::string& msg) const {
    throw DataError(origin_ + ": byte offset " + std::to_string(offset) + ": " + msg);
  }

 private:
  std::size_t skip_ws() {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    return pos_;
  }

  std::string_view bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

void check_payload(const HeaderReader& hr, std::size_t start, std::size_t available, std::size_t expected) {
  if (available < expected) {
    hr.fail(start + available, "truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                                   std::to_string(available));
  }
  if (available > expected) {
    hr.fail(start + expected, "trailing data: expected " + std::to_string(expected) + " payload bytes, found " +
                                  std::to_string(available));
  }
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

bool host_little_endian() { return std::endian::native == std::endian::little; }

std::tuple<std::int64_t, std::int64_t, std::int64_t> chw_dims(const Tensor& t, const char* what) {
  if (t.rank() == 2) return {1, t.dim(0), t.dim(1)};
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2)};
  throw ShapeError(std::string(what) + " expects a [C,H,W] or [H,W] tensor, got " + shape_str(t.shape()));
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write to '" + path + "' failed");
}

// ---- PFM --------------------------------------------------------------------

PfmImage parse_pfm(std::string_view bytes, const std::string& origin) {
  HeaderReader hr(bytes, origin);
  const std::string_view magic = hr.token("magic");
  std::int64_t channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    hr.fail(0, "bad magic '" + std::string(magic.substr(0, 8)) + "', expected Pf or PF");
  }
  const std::int64_t width = hr.integer("width");
  const std::int64_t height = hr.integer("height");
  const std::size_t scale_at = hr.pos();
  const double scale = hr.real("scale");
  if (scale == 0.0) hr.fail(scale_at, "zero scale (sign must encode byte order)");
  const std::size_t start = hr.payload_start();
  const std::size_t expected = static_cast<std::size_t>(channels * width * height) * 4;
  check_payload(hr, start, bytes.size() - std::min(start, bytes.size()), expected);

  const bool swap = (scale < 0) != host_little_endian();
  PfmImage img{Tensor({channels, height, width}), static_cast<float>(scale)};
  const char* src = bytes.data() + start;
  for (std::int64_t row = 0; row < height; ++row) {
    const std::int64_t y = height - 1 - row;  // bottom-to-top on disk
    for (std::int64_t x = 0; x < width; ++x) {
      for (std::int64_t c = 0; c < channels; ++c) {
        std::uint32_t raw;
        std::memcpy(&raw, src, 4);
        src += 4;
        if (swap) raw = byteswap32(raw);
        const float v = std::bit_cast<float>(raw);
        if (!std::isfinite(v)) {
          hr.fail(static_cast<std::size_t>(src - bytes.data()) - 4, "non-finite value in payload");
        }
        img.data[(c * height + y) * width + x] = static_cast<Real>(v);
      }
    }
  }
  return img;
}

PfmImage read_pfm(const std::string& path) { return parse_pfm(read_file(path), path); }

std::string encode_pfm(const Tensor& chw, float scale) {
  const auto [channels, height, width] = chw_dims(chw, "PFM writer");
  if (channels != 1 && channels != 3) throw ShapeError("PFM holds 1 or 3 channels, got " + std::to_string(channels));
  if (scale == 0.0f || !std::isfinite(scale)) throw ConfigError("PFM scale must be finite and nonzero");
  std::ostringstream head;
  head << (channels == 1 ? "Pf" : "PF") << '\n' << width << ' ' << height << '\n';
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), scale);
  (void)ec;
  head << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
  std::string out = head.str();
  const std::size_t start = out.size();
  out.resize(start + static_cast<std::size_t>(channels * height * width) * 4);
  char* dst = out.data() + start;
  const bool swap = (scale < 0) != host_little_endian();
  for (std::int64_t row = 0; row < height; ++row) {
    const std::int64_t y = height - 1 - row;
    for (std::int64_t x = 0; x < width; ++x) {
      for (std::int64_t c = 0; c < channels; ++c) {
        std::uint32_t raw = std::bit_cast<std::uint32_t>(static_cast<float>(chw[(c * height + y) * width + x]));
        if (swap) raw = byteswap32(raw);
        std::memcpy(dst, &raw, 4);
        dst += 4;
      }
    }
  }
  return out;
}

void write_pfm(const std::string& path, const Tensor& chw, float scale) { write_file(path, encode_pfm(chw, scale)); }

// ---- 8-bit rasters ----------------------------------------------------------

Tensor parse_image(std::string_view bytes, const std::string& origin) {
  HeaderReader hr(bytes, origin);
  const std::string_view magic = hr.token("magic");
  std::int64_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    hr.fail(0, "bad magic '" + std::string(magic.substr(0, 8)) + "', expected P5 or P6");
  }
  const std::int64_t width = hr.integer("width");
  const std::int64_t height = hr.integer("height");
  const std::size_t maxval_at = hr.pos();
  if (hr.integer("maxval") != 255) hr.fail(maxval_at, "only maxval 255 is supported");
  const std::size_t start = hr.payload_start();
  const std::size_t expected = static_cast<std::size_t>(channels * width * height);
  check_payload(hr, start, bytes.size() - std::min(start, bytes.size()), expected);

  Tensor img({channels, height, width});
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::int64_t y = 0; y < height; ++y)
    for (std::int64_t x = 0; x < width; ++x)
      for (std::int64_t c = 0; c < channels; ++c) img[(c * height + y) * width + x] = static_cast<Real>(*src++) / 255;
  return img;
}

Tensor read_image(const std::string& path) { return parse_image(read_file(path), path); }

std::string encode_image(const Tensor& chw) {
  const auto [channels, height, width] = chw_dims(chw, "image writer");
  if (channels != 1 && channels != 3) throw ShapeError("images hold 1 or 3 channels, got " + std::to_string(channels));
  std::string out = (channels == 1 ? "P5\n" : "P6\n") + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      for (std::int64_t c = 0; c < channels; ++c) {
        const double v = std::clamp(static_cast<double>(chw[(c * height + y) * width + x]), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255))));
      }
    }
  }
  return out;
}

void write_image(const std::string& path, const Tensor& chw) { write_file(path, encode_image(chw)); }

// ---- Manifest ---------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  const std::string text = read_file(path);
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : dir / fp).string();
  };
  std::vector<ManifestEntry> entries;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 3 tab-separated paths, found " +
                      std::to_string(fields.size()));
    }
    entries.push_back({resolve(fields[0]), resolve(fields[1]), resolve(fields[2])});
  }
  return entries;
}

}  // namespace disco::inline DISCO_ABI
