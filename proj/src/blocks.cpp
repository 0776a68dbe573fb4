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

#include "disco/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

int receptive_field(int kernel, int dilation) {
  if (kernel < 1 || dilation < 1) throw ConfigError("receptive field needs kernel >= 1 and dilation >= 1");
  return (kernel - 1) * (dilation - 1) + kernel;
}

int receptive_field(const ConvSpec& spec) { return receptive_field(spec.kernel, spec.dilation); }

int stacked_receptive_field(const std::vector<ConvSpec>& specs) {
  if (specs.empty()) throw ConfigError("stacked receptive field of an empty stack");
  int total = 0;
  for (const auto& s : specs) {
    if (s.stride != 1) throw ConfigError("stacked receptive field assumes unit stride inside the stack");
    total += receptive_field(s);
  }
  return total - static_cast<int>(specs.size() - 1);
}

// ---- Dense block ----------------------------------------------------------

std::vector<ConvSpec> DenseBlockSpec::conv_specs() const {
  std::vector<ConvSpec> specs;
  for (int i = 1; i <= layers; ++i) {
    specs.push_back(ConvSpec::same(layer_input_channels(i), growth, kernel, dilations[static_cast<std::size_t>(i - 1)]));
  }
  return specs;
}

void DenseBlockSpec::validate() const {
  if (layers < 1 || growth < 1 || in_channels < 1) throw ConfigError("dense block needs layers, growth and input channels >= 1");
  if (dilations.size() != static_cast<std::size_t>(layers)) {
    throw ConfigError("dense block dilation schedule has " + std::to_string(dilations.size()) + " entries for " +
                      std::to_string(layers) + " layers");
  }
}

void declare_dense_block(const ParamBuilder& b, const DenseBlockSpec& spec) {
  spec.validate();
  const auto specs = spec.conv_specs();
  for (std::size_t i = 0; i < specs.size(); ++i) b.sub("layer" + std::to_string(i + 1)).sub("conv").conv(specs[i]);
}

Var dense_block(const ParamScope& s, Var input, const DenseBlockSpec& spec) {
  spec.validate();
  if (input.dim(1) != spec.in_channels) {
    throw ConfigError("dense block " + s.prefix() + " expects " + std::to_string(spec.in_channels) +
                      " input channels, got " + std::to_string(input.dim(1)));
  }
  const auto specs = spec.conv_specs();
  std::vector<Var> features{input};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Var in = features.size() == 1 ? input : ops::concat_channels(features);
    Var out = s.sub("layer" + std::to_string(i + 1)).sub("conv").conv(ops::elu(in), specs[i]);
    features.push_back(out);
  }
  return ops::concat_channels(features);
}

// ---- Correlation ----------------------------------------------------------

Var correlation(Var left, Var right, const CorrelationSpec& spec) {
  if (spec.max_disparity < 1) throw ConfigError("correlation needs max disparity >= 1");
  require_rank(left.value(), 4, "correlation left");
  if (left.shape() != right.shape()) {
    throw ShapeError("correlation: left " + shape_str(left.shape()) + " vs right " + shape_str(right.shape()));
  }
  const Tensor& l = left.value();
  const Tensor& r = right.value();
  const std::int64_t n = l.dim(0), c = l.dim(1), h = l.dim(2), w = l.dim(3);
  const std::int64_t dmax = spec.max_disparity;
  const Real inv_c = Real(1) / static_cast<Real>(c);
  Tensor out({n, dmax, h, w});
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t d = 0; d < dmax && d < w; ++d) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t y = 0; y < h; ++y) {
          const Real* lr = l.ptr() + ((b * c + ch) * h + y) * w;
          const Real* rr = r.ptr() + ((b * c + ch) * h + y) * w;
          Real* orow = out.ptr() + ((b * dmax + d) * h + y) * w;
          for (std::int64_t x = d; x < w; ++x) orow[x] += lr[x] * rr[x - d];
        }
      }
      Real* plane = out.ptr() + (b * dmax + d) * h * w;
      for (std::int64_t i = 0; i < h * w; ++i) plane[i] *= inv_c;
    }
  }
  return left.graph().record(
      "correlation", std::move(out), {left, right}, [left, right, dmax, inv_c](Graph& g, const Tensor& gout) {
        const Tensor& l = left.value();
        const Tensor& r = right.value();
        Tensor* gl = g.requires_grad(left) ? &g.grad_buffer(left.id()) : nullptr;
        Tensor* gr = g.requires_grad(right) ? &g.grad_buffer(right.id()) : nullptr;
        const std::int64_t n = l.dim(0), c = l.dim(1), h = l.dim(2), w = l.dim(3);
        for (std::int64_t b = 0; b < n; ++b) {
          for (std::int64_t d = 0; d < dmax && d < w; ++d) {
            for (std::int64_t ch = 0; ch < c; ++ch) {
              for (std::int64_t y = 0; y < h; ++y) {
                const std::int64_t row = ((b * c + ch) * h + y) * w;
                const Real* go = gout.ptr() + ((b * dmax + d) * h + y) * w;
                if (gl) {
                  Real* dst = gl->ptr() + row;
                  const Real* rr = r.ptr() + row;
                  for (std::int64_t x = d; x < w; ++x) dst[x] += go[x] * rr[x - d] * inv_c;
                }
                if (gr) {
                  Real* dst = gr->ptr() + row;
                  const Real* lr = l.ptr() + row;
                  for (std::int64_t x = d; x < w; ++x) dst[x - d] += go[x] * lr[x] * inv_c;
                }
              }
            }
          }
        }
      });
}

Tensor patch_features(const Tensor& image, int radius) {
  require_rank(image, 4, "patch_features image");
  if (radius < 0) throw ConfigError("patch radius must be >= 0");
  const std::int64_t n = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const std::int64_t side = 2 * radius + 1;
  const std::int64_t k = c * side * side;
  Tensor out({n, k, h, w});
  std::vector<double> buf(static_cast<std::size_t>(k));
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        std::size_t i = 0;
        double mean = 0;
        for (std::int64_t ch = 0; ch < c; ++ch) {
          for (std::int64_t dy = -radius; dy <= radius; ++dy) {
            for (std::int64_t dx = -radius; dx <= radius; ++dx) {
              const std::int64_t yy = y + dy, xx = x + dx;
              const double v = (yy >= 0 && yy < h && xx >= 0 && xx < w) ? image.at(b, ch, yy, xx) : 0.0;
              buf[i++] = v;
              mean += v;
            }
          }
        }
        mean /= static_cast<double>(k);
        double norm = 0;
        for (auto& v : buf) {
          v -= mean;
          norm += v * v;
        }
        norm = std::sqrt(norm);
        for (std::int64_t j = 0; j < k; ++j) {
          out.at(b, j, y, x) = norm > 1e-12 ? static_cast<Real>(buf[static_cast<std::size_t>(j)] / norm) : Real(0);
        }
      }
    }
  }
  return out;
}

// ---- Warping --------------------------------------------------------------

Var warp_horizontal(Var source, Var disparity) {
  require_rank(source.value(), 4, "warp source");
  require_rank(disparity.value(), 4, "warp disparity");
  const Tensor& src = source.value();
  const Tensor& disp = disparity.value();
  const std::int64_t n = src.dim(0), c = src.dim(1), h = src.dim(2), w = src.dim(3);
  if (disp.dim(0) != n || disp.dim(1) != 1 || disp.dim(2) != h || disp.dim(3) != w) {
    throw ShapeError("warp_horizontal: disparity " + shape_str(disp.shape()) + " does not match source " +
                     shape_str(src.shape()));
  }
  disp.check_finite("warp_horizontal disparity");
  Tensor out(src.shape());
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const Real p = static_cast<Real>(x) - disp.at(b, 0, y, x);
        const Real fl = std::floor(p);
        const auto x0 = static_cast<std::int64_t>(fl);
        const Real a = p - fl;
        const bool in0 = x0 >= 0 && x0 < w;
        const bool in1 = x0 + 1 >= 0 && x0 + 1 < w;
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const Real* row = src.ptr() + ((b * c + ch) * h + y) * w;
          const Real v0 = in0 ? row[x0] : Real(0);
          const Real v1 = in1 ? row[x0 + 1] : Real(0);
          out.at(b, ch, y, x) = (1 - a) * v0 + a * v1;
        }
      }
    }
  }
  return source.graph().record(
      "warp_horizontal", std::move(out), {source, disparity}, [source, disparity](Graph& g, const Tensor& gout) {
        const Tensor& src = source.value();
        const Tensor& disp = disparity.value();
        Tensor* gs = g.requires_grad(source) ? &g.grad_buffer(source.id()) : nullptr;
        Tensor* gd = g.requires_grad(disparity) ? &g.grad_buffer(disparity.id()) : nullptr;
        const std::int64_t n = src.dim(0), c = src.dim(1), h = src.dim(2), w = src.dim(3);
        for (std::int64_t b = 0; b < n; ++b) {
          for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
              const Real p = static_cast<Real>(x) - disp.at(b, 0, y, x);
              const Real fl = std::floor(p);
              const auto x0 = static_cast<std::int64_t>(fl);
              const Real a = p - fl;
              const bool in0 = x0 >= 0 && x0 < w;
              const bool in1 = x0 + 1 >= 0 && x0 + 1 < w;
              Real gdisp = 0;
              for (std::int64_t ch = 0; ch < c; ++ch) {
                const std::int64_t row = ((b * c + ch) * h + y) * w;
                const Real go = gout[row + x];
                if (gs) {
                  if (in0) (*gs)[row + x0] += (1 - a) * go;
                  if (in1) (*gs)[row + x0 + 1] += a * go;
                }
                const Real v0 = in0 ? src[row + x0] : Real(0);
                const Real v1 = in1 ? src[row + x0 + 1] : Real(0);
                // d out / d disparity = -(v1 - v0).
                gdisp -= go * (v1 - v0);
              }
              if (gd) gd->at(b, 0, y, x) += gdisp;
            }
          }
        }
      });
}

// ---- SPP ------------------------------------------------------------------

Var spp(Var input, const std::vector<int>& pool_kernels) {
  require_rank(input.value(), 4, "spp input");
  if (pool_kernels.empty()) throw ConfigError("spp needs at least one pool kernel");
  const std::int64_t h = input.dim(2), w = input.dim(3);
  std::vector<Var> branches;
  for (int s : pool_kernels) {
    if (s < 1) throw ConfigError("spp pool kernel must be >= 1");
    const std::int64_t ph = (h + s - 1) / s * s, pw = (w + s - 1) / s * s;
    Var padded = (ph == h && pw == w) ? input : ops::pad_bottom_right(input, ph - h, pw - w);
    Var pooled = ops::maxpool2d(padded, s, s);
    Var restored = s == 1 ? pooled : ops::resize_bilinear(pooled, ph, pw);
    branches.push_back((ph == h && pw == w) ? restored : ops::crop(restored, 0, 0, h, w));
  }
  return ops::concat_channels(branches);
}

// ---- LGCF -----------------------------------------------------------------

namespace {

// Gain of the random part of the LGCF fusion weights.
constexpr double kFusionMixGain = 0.1;

}  // namespace

LgcfSpec LgcfSpec::standard(int feature_channels, int growth, int fusion_channels) {
  LgcfSpec s;
  s.dense.layers = 6;
  s.dense.growth = growth;
  s.dense.in_channels = feature_channels;
  s.dense.dilations = {1, 3, 6, 12, 18, 24};
  s.pool_kernels = {8, 16, 32, 64};
  s.feature_channels = feature_channels;
  s.fusion_channels = fusion_channels;
  return s;
}

int LgcfSpec::concat_channels() const {
  return feature_channels + dense.output_channels() + static_cast<int>(pool_kernels.size()) * feature_channels;
}

void LgcfSpec::validate() const {
  dense.validate();
  if (dense.in_channels != feature_channels) throw ConfigError("lgcf dense branch must consume the feature channels");
  if (pool_kernels.empty()) throw ConfigError("lgcf needs at least one pool kernel");
  if (fusion_channels < 1) throw ConfigError("lgcf fusion width must be >= 1");
}

void declare_lgcf(const ParamBuilder& b, const LgcfSpec& spec) {
  spec.validate();
  declare_dense_block(b.sub("dense"), spec.dense);
  // The fusion starts as the identity on the original features plus a small
  // random mix of the context channels, so the module begins as plain
  // correlation and learns how much context to blend in.
  ParamBuilder fuse = b.sub("fuse");
  fuse.conv(ConvSpec::same(spec.concat_channels(), spec.fusion_channels, 1), kFusionMixGain);
  Tensor& w = fuse.declared("weight");
  for (int o = 0; o < std::min(spec.fusion_channels, spec.feature_channels); ++o) w.at(o, o, 0, 0) += 1;
}

Var lgcf_fuse(const ParamScope& s, Var features, const LgcfSpec& spec) {
  Var dense = dense_block(s.sub("dense"), features, spec.dense);
  Var pooled = spp(features, spec.pool_kernels);
  Var cat = ops::concat_channels({features, dense, pooled});
  return s.sub("fuse").conv(cat, ConvSpec::same(spec.concat_channels(), spec.fusion_channels, 1));
}

Var lgcf(const ParamScope& s, Var left, Var right, const LgcfSpec& spec, const CorrelationSpec& corr) {
  spec.validate();
  Var fl = lgcf_fuse(s, left, spec);
  Var fr = lgcf_fuse(s, right, spec);
  return correlation(fl, fr, corr);
}

}  // namespace disco::inline DISCO_ABI
