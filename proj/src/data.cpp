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

#include <algorithm>
#include <cmath>
#include <random>

#include "disco/data.hpp"
#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void StereoSample::validate() const {
  require_rank(left, 3, "left view");
  if (right.shape() != left.shape()) {
    throw ShapeError("right view " + shape_str(right.shape()) + " does not match left " + shape_str(left.shape()));
  }
  const Shape plane{1, left.dim(1), left.dim(2)};
  if (gt.shape() != plane) throw ShapeError("ground truth " + shape_str(gt.shape()) + ", expected " + shape_str(plane));
  if (mask.shape() != plane) throw ShapeError("mask " + shape_str(mask.shape()) + ", expected " + shape_str(plane));
}

RdsLayout parse_layout(const std::string& name) {
  if (name == "constant") return RdsLayout::kConstant;
  if (name == "layered") return RdsLayout::kLayered;
  if (name == "ramp") return RdsLayout::kRamp;
  if (name == "mixed") return RdsLayout::kMixed;
  throw ConfigError("unknown disparity layout '" + name + "' (constant|layered|ramp|mixed)");
}

std::string layout_name(RdsLayout layout) {
  switch (layout) {
    case RdsLayout::kConstant: return "constant";
    case RdsLayout::kLayered: return "layered";
    case RdsLayout::kRamp: return "ramp";
    case RdsLayout::kMixed: return "mixed";
  }
  return "layered";
}

void RdsConfig::validate() const {
  if (height < 1 || width < 1 || channels < 1) throw ConfigError("rds: image dimensions must be positive");
  if (!(density > 0 && density <= 1)) throw ConfigError("rds: density must lie in (0, 1]");
  if (dot_size < 1) throw ConfigError("rds: dot_size must be >= 1");
  if (!(max_disparity > 0)) throw ConfigError("rds: max_disparity must be positive");
  if (!(max_disparity < width / 4.0)) {
    throw ConfigError("rds: max_disparity " + format_double(max_disparity) + " must stay below width/4 = " +
                      format_double(width / 4.0));
  }
  if (constant_disparity >= max_disparity) throw ConfigError("rds: constant_disparity must be below max_disparity");
  if (layers < 0) throw ConfigError("rds: layers must be >= 0");
  if (background < 0 || background > 1) throw ConfigError("rds: background must lie in [0, 1]");
}

void RdsConfig::write(KvConfig& kv, const std::string& p) const {
  kv.set(p + "height", std::to_string(height));
  kv.set(p + "width", std::to_string(width));
  kv.set(p + "channels", std::to_string(channels));
  kv.set(p + "density", format_double(density));
  kv.set(p + "dot_size", std::to_string(dot_size));
  kv.set(p + "background", format_double(background));
  kv.set(p + "layout", layout_name(layout));
  kv.set(p + "max_disparity", format_double(max_disparity));
  kv.set(p + "constant_disparity", format_double(constant_disparity));
  kv.set(p + "layers", std::to_string(layers));
  kv.set(p + "integer_disparity", integer_disparity ? "true" : "false");
  kv.set(p + "occlusion", occlusion ? "true" : "false");
  kv.set(p + "seed", std::to_string(seed));
}

RdsConfig RdsConfig::read(const KvConfig& kv, const std::string& p) {
  RdsConfig c;
  c.height = static_cast<int>(kv.get_int(p + "height", c.height));
  c.width = static_cast<int>(kv.get_int(p + "width", c.width));
  c.channels = static_cast<int>(kv.get_int(p + "channels", c.channels));
  c.density = kv.get_double(p + "density", c.density);
  c.dot_size = static_cast<int>(kv.get_int(p + "dot_size", c.dot_size));
  c.background = kv.get_double(p + "background", c.background);
  c.layout = parse_layout(kv.get_string(p + "layout", layout_name(c.layout)));
  c.max_disparity = kv.get_double(p + "max_disparity", c.max_disparity);
  c.constant_disparity = kv.get_double(p + "constant_disparity", c.constant_disparity);
  c.layers = static_cast<int>(kv.get_int(p + "layers", c.layers));
  c.integer_disparity = kv.get_bool(p + "integer_disparity", c.integer_disparity);
  c.occlusion = kv.get_bool(p + "occlusion", c.occlusion);
  c.seed = static_cast<std::uint64_t>(kv.get_int(p + "seed", static_cast<std::int64_t>(c.seed)));
  c.validate();
  return c;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Disparity field in left-view coordinates, [H*W].
std::vector<Real> disparity_field(const RdsConfig& c, RdsLayout layout, Rng& rng) {
  const int h = c.height, w = c.width;
  std::vector<Real> d(static_cast<std::size_t>(h) * w);
  const double top = c.max_disparity;
  auto quantize = [&](double v) {
    if (c.integer_disparity) v = std::floor(v);
    return std::clamp(v, 0.0, std::nextafter(top, 0.0));
  };
  switch (layout) {
    case RdsLayout::kConstant: {
      const double v = c.constant_disparity >= 0 ? c.constant_disparity : quantize(uniform(rng, 0, top));
      std::fill(d.begin(), d.end(), static_cast<Real>(v));
      break;
    }
    case RdsLayout::kRamp: {
      // a + b*x/W + e*y/H kept inside [0, top)
      const double lo = uniform(rng, 0, top * 0.5);
      const double span = uniform(rng, 0, top - lo) * 0.999;
      const double bx = uniform(rng, -1, 1), by = uniform(rng, -1, 1);
      const double norm = std::abs(bx) + std::abs(by) + 1e-12;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double u = 0.5 + 0.5 * (bx * (2.0 * x / w - 1) + by * (2.0 * y / h - 1)) / norm;
          d[static_cast<std::size_t>(y) * w + x] = static_cast<Real>(lo + span * u);
        }
      }
      break;
    }
    case RdsLayout::kLayered:
    default: {
      double level = quantize(uniform(rng, 0, top / 3));
      std::fill(d.begin(), d.end(), static_cast<Real>(level));
      for (int i = 0; i < c.layers; ++i) {
        // Each rectangle is nearer than the ones below it.
        const double lo = std::min(level + 1, top - 1);
        level = std::max(level, quantize(uniform(rng, lo, top)));
        const int rh = uniform_int(rng, std::max(1, h / 6), std::max(1, h / 2));
        const int rw = uniform_int(rng, std::max(1, w / 8), std::max(1, w / 3));
        const int y0 = uniform_int(rng, 0, h - rh), x0 = uniform_int(rng, 0, w - rw);
        for (int y = y0; y < y0 + rh; ++y)
          for (int x = x0; x < x0 + rw; ++x) d[static_cast<std::size_t>(y) * w + x] = static_cast<Real>(level);
      }
      break;
    }
  }
  return d;
}

}  // namespace

StereoSample generate_rds(const RdsConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, 0x5eed));
  const int h = config.height, w = config.width, ch = config.channels;
  RdsLayout layout = config.layout;
  if (layout == RdsLayout::kMixed) {
    const RdsLayout choices[] = {RdsLayout::kConstant, RdsLayout::kLayered, RdsLayout::kRamp};
    layout = choices[uniform_int(rng, 0, 2)];
  }

  auto dot = [&](Rng& r) {
    std::vector<Real> v(static_cast<std::size_t>(ch));
    const bool on = uniform(r, 0, 1) < config.density;
    for (Real& x : v) x = static_cast<Real>(on ? uniform(r, 0, 1) : config.background);
    return v;
  };

  StereoSample s{Tensor({ch, h, w}), Tensor({ch, h, w}), Tensor({1, h, w}), Tensor::zeros({1, h, w})};
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;

  // Right view: blocky dot texture.
  const int s_dot = config.dot_size;
  const int th = (h + s_dot - 1) / s_dot, tw = (w + s_dot - 1) / s_dot;
  std::vector<std::vector<Real>> texels;
  texels.reserve(static_cast<std::size_t>(th) * tw);
  for (int i = 0; i < th * tw; ++i) texels.push_back(dot(rng));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        s.right[c * plane + y * w + x] = texels[static_cast<std::size_t>((y / s_dot) * tw + x / s_dot)][static_cast<std::size_t>(c)];
      }

  const std::vector<Real> disp = disparity_field(config, layout, rng);
  Rng fill_rng(mix_seed(config.seed, 0xf111));
  for (int y = 0; y < h; ++y) {
    const Real* drow = disp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const Real d = drow[x];
      s.gt[y * w + x] = d;
      // Same sampling arithmetic as warp_horizontal.
      const Real p = static_cast<Real>(x) - d;
      const Real fl = std::floor(p);
      const auto x0 = static_cast<std::int64_t>(fl);
      const Real a = p - fl;
      bool valid = x0 >= 0 && (a == 0 ? x0 < w : x0 + 1 < w);
      if (valid && config.occlusion) {
        // Hidden when a nearer left pixel lands within half a pixel of the same right position.
        const int reach = static_cast<int>(std::ceil(config.max_disparity)) + 1;
        for (int xn = std::max(0, x - reach); xn < std::min(w, x + reach + 1) && valid; ++xn) {
          if (drow[xn] > d && std::abs((static_cast<Real>(xn) - drow[xn]) - p) < Real(0.5)) valid = false;
        }
      }
      if (valid) {
        s.mask[y * w + x] = 1;
        for (int c = 0; c < ch; ++c) {
          const Real* row = s.right.ptr() + c * plane + static_cast<std::int64_t>(y) * w;
          const Real v0 = row[x0];
          const Real v1 = x0 + 1 < w ? row[x0 + 1] : Real(0);
          s.left[c * plane + y * w + x] = (1 - a) * v0 + a * v1;
        }
      } else {
        const std::vector<Real> v = dot(fill_rng);
        for (int c = 0; c < ch; ++c) s.left[c * plane + y * w + x] = v[static_cast<std::size_t>(c)];
      }
    }
  }
  return s;
}

// ---- Augmentation -------------------------------------------------------------

void AugmentConfig::validate() const {
  if (crop_height < 0 || crop_width < 0) throw ConfigError("augment: crop size must be >= 0");
  auto range = [](double lo, double hi, const char* what) {
    if (!(lo > 0) || !(hi >= lo)) throw ConfigError(std::string("augment: invalid ") + what + " range");
  };
  range(brightness_min, brightness_max, "brightness");
  range(gamma_min, gamma_max, "gamma");
  range(color_min, color_max, "color");
}

void AugmentConfig::write(KvConfig& kv, const std::string& p) const {
  kv.set(p + "enabled", enabled ? "true" : "false");
  kv.set(p + "crop_height", std::to_string(crop_height));
  kv.set(p + "crop_width", std::to_string(crop_width));
  kv.set(p + "brightness", join_doubles({brightness_min, brightness_max}));
  kv.set(p + "gamma", join_doubles({gamma_min, gamma_max}));
  kv.set(p + "color", join_doubles({color_min, color_max}));
}

AugmentConfig AugmentConfig::read(const KvConfig& kv, const std::string& p) {
  AugmentConfig c;
  c.enabled = kv.get_bool(p + "enabled", c.enabled);
  c.crop_height = static_cast<int>(kv.get_int(p + "crop_height", c.crop_height));
  c.crop_width = static_cast<int>(kv.get_int(p + "crop_width", c.crop_width));
  auto pair = [&](const char* key, double& lo, double& hi) {
    const std::vector<double> v = kv.get_double_list(p + key, {lo, hi});
    if (v.size() != 2) throw ConfigError(p + key + ": expected 'min, max'");
    lo = v[0];
    hi = v[1];
  };
  pair("brightness", c.brightness_min, c.brightness_max);
  pair("gamma", c.gamma_min, c.gamma_max);
  pair("color", c.color_min, c.color_max);
  c.validate();
  return c;
}

StereoSample crop(const StereoSample& s, std::int64_t y0, std::int64_t x0, std::int64_t h, std::int64_t w) {
  s.validate();
  if (h < 1 || w < 1 || y0 < 0 || x0 < 0 || y0 + h > s.height() || x0 + w > s.width()) {
    throw ConfigError("crop " + std::to_string(h) + "x" + std::to_string(w) + " at (" + std::to_string(y0) + "," +
                      std::to_string(x0) + ") exceeds image " + std::to_string(s.height()) + "x" +
                      std::to_string(s.width()));
  }
  auto cut = [&](const Tensor& t) {
    const std::int64_t c = t.dim(0);
    Tensor out({c, h, w});
    for (std::int64_t k = 0; k < c; ++k)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) out[(k * h + y) * w + x] = t[(k * t.dim(1) + y0 + y) * t.dim(2) + x0 + x];
    return out;
  };
  return {cut(s.left), cut(s.right), cut(s.gt), cut(s.mask)};
}

StereoSample apply_photometric(const StereoSample& s, const PhotometricParams& p) {
  s.validate();
  if (p.color.size() < static_cast<std::size_t>(s.channels())) {
    throw ConfigError("color shift needs one factor per channel");
  }
  StereoSample out = s;
  const std::int64_t plane = s.height() * s.width();
  for (Tensor* view : {&out.left, &out.right}) {
    for (std::int64_t c = 0; c < s.channels(); ++c) {
      const double k = p.color[static_cast<std::size_t>(c)];
      Real* v = view->ptr() + c * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const double b = std::max(0.0, static_cast<double>(v[i]) * p.brightness);
        v[i] = static_cast<Real>(std::clamp(std::pow(b, p.gamma) * k, 0.0, 1.0));
      }
    }
  }
  return out;
}

StereoSample augment(const StereoSample& s, const AugmentConfig& config, std::uint64_t seed) {
  config.validate();
  s.validate();
  Rng rng(mix_seed(seed, 0xa06));
  const std::int64_t ch = config.crop_height > 0 ? config.crop_height : s.height();
  const std::int64_t cw = config.crop_width > 0 ? config.crop_width : s.width();
  if (ch > s.height() || cw > s.width()) {
    throw ConfigError("crop " + std::to_string(ch) + "x" + std::to_string(cw) + " larger than image " +
                      std::to_string(s.height()) + "x" + std::to_string(s.width()));
  }
  const auto y0 = std::uniform_int_distribution<std::int64_t>(0, s.height() - ch)(rng);
  const auto x0 = std::uniform_int_distribution<std::int64_t>(0, s.width() - cw)(rng);
  PhotometricParams p;
  p.brightness = uniform(rng, config.brightness_min, config.brightness_max);
  p.gamma = uniform(rng, config.gamma_min, config.gamma_max);
  p.color.resize(static_cast<std::size_t>(s.channels()));
  for (double& k : p.color) k = uniform(rng, config.color_min, config.color_max);
  return apply_photometric(crop(s, y0, x0, ch, cw), p);
}

}  // namespace disco::inline DISCO_ABI
