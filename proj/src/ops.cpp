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

#include "disco/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "disco/detail/kernels.hpp"
#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

namespace {

Real g_conv_weight_grad_offset = Real(0);

// Gradient accumulator of a parent, or nullptr when it needs none.
Tensor* grad_of(Graph& g, const Var& v) { return g.requires_grad(v) ? &g.grad_buffer(v.id()) : nullptr; }

void require_nchw(const Var& v, const char* what) { require_rank(v.value(), 4, what); }

std::string dim_msg(const char* op, const char* dim, std::int64_t expected, std::int64_t got) {
  return std::string(op) + ": " + dim + " mismatch (expected " + std::to_string(expected) + ", got " +
         std::to_string(got) + ")";
}

// Precomputed bilinear taps along one axis (align_corners = false).
struct LinearTaps {
  std::vector<std::int64_t> i0, i1;
  std::vector<Real> w1;
};

LinearTaps make_taps(std::int64_t in, std::int64_t out) {
  LinearTaps t;
  t.i0.resize(static_cast<std::size_t>(out));
  t.i1.resize(static_cast<std::size_t>(out));
  t.w1.resize(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::int64_t>(std::floor(src));
    i0 = std::min(i0, in - 1);
    const std::int64_t i1 = std::min(i0 + 1, in - 1);
    const auto idx = static_cast<std::size_t>(o);
    t.i0[idx] = i0;
    t.i1[idx] = i1;
    t.w1[idx] = static_cast<Real>(src - static_cast<double>(i0));
  }
  return t;
}

}  // namespace

ConvSpec ConvSpec::same(int in_channels, int out_channels, int kernel, int dilation, int stride) {
  ConvSpec s;
  s.kernel = kernel;
  s.dilation = dilation;
  s.stride = stride;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.pad = s.receptive_field() / 2;
  return s;
}

void ConvSpec::validate() const {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("conv kernel must be odd and positive, got " + std::to_string(kernel));
  if (dilation < 1) throw ConfigError("conv dilation must be >= 1, got " + std::to_string(dilation));
  if (stride < 1) throw ConfigError("conv stride must be >= 1, got " + std::to_string(stride));
  if (pad < 0) throw ConfigError("conv padding must be >= 0, got " + std::to_string(pad));
  if (in_channels < 1 || out_channels < 1) throw ConfigError("conv channel counts must be positive");
}

std::int64_t conv_output_size(std::int64_t in, const ConvSpec& spec) {
  const std::int64_t span = in + 2 * spec.pad - spec.receptive_field();
  if (span < 0) {
    throw ShapeError("conv input extent " + std::to_string(in) + " smaller than receptive field " +
                     std::to_string(spec.receptive_field()) + " with padding " + std::to_string(spec.pad));
  }
  return span / spec.stride + 1;
}

void DeconvSpec::validate() const {
  if (stride < 1) throw ConfigError("deconv stride must be positive, got " + std::to_string(stride));
  if (kernel < 1) throw ConfigError("deconv kernel must be positive, got " + std::to_string(kernel));
  if (pad < 0 || output_padding < 0 || output_padding >= stride) throw ConfigError("deconv padding out of range");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("deconv channel counts must be positive");
}

std::int64_t deconv_output_size(std::int64_t in, const DeconvSpec& spec) {
  return (in - 1) * spec.stride - 2 * spec.pad + spec.kernel + spec.output_padding;
}

namespace testing {
void set_conv_weight_grad_offset(Real offset) { g_conv_weight_grad_offset = offset; }
}  // namespace testing

namespace ops {

Var conv2d(Var input, Var weight, Var bias, const ConvSpec& spec) {
  spec.validate();
  require_nchw(input, "conv2d input");
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  require_rank(w, 4, "conv2d weight");
  if (x.dim(1) != spec.in_channels) throw ShapeError(dim_msg("conv2d", "input channels", spec.in_channels, x.dim(1)));
  if (w.dim(0) != spec.out_channels) throw ShapeError(dim_msg("conv2d", "weight out-channels", spec.out_channels, w.dim(0)));
  if (w.dim(1) != spec.in_channels) throw ShapeError(dim_msg("conv2d", "weight in-channels", spec.in_channels, w.dim(1)));
  if (w.dim(2) != spec.kernel || w.dim(3) != spec.kernel) throw ShapeError(dim_msg("conv2d", "kernel size", spec.kernel, w.dim(2)));
  if (bias.valid() && bias.value().size() != spec.out_channels) {
    throw ShapeError(dim_msg("conv2d", "bias length", spec.out_channels, bias.value().size()));
  }

  const std::int64_t n = x.dim(0), h = x.dim(2), wd = x.dim(3);
  const detail::PatchGeometry geo{spec.in_channels, h, wd, conv_output_size(h, spec), conv_output_size(wd, spec),
                                  spec.kernel, spec.dilation, spec.stride, spec.pad};
  const std::int64_t cout = spec.out_channels;
  const std::int64_t rows = geo.rows(), cols = geo.cols();
  const bool pointwise = spec.kernel == 1 && spec.stride == 1 && spec.pad == 0;

  Tensor out({n, cout, geo.out_h, geo.out_w});
  std::vector<Real> col(pointwise ? 0 : static_cast<std::size_t>(rows * cols));
  for (std::int64_t b = 0; b < n; ++b) {
    const Real* xb = x.ptr() + b * spec.in_channels * h * wd;
    const Real* colp = xb;
    if (!pointwise) {
      detail::im2col(xb, geo, col.data());
      colp = col.data();
    }
    Real* ob = out.ptr() + b * cout * cols;
    detail::gemm(false, false, cout, cols, rows, w.ptr(), colp, ob, false);
    if (bias.valid()) {
      const Real* bp = bias.value().ptr();
      for (std::int64_t c = 0; c < cout; ++c) {
        Real* plane = ob + c * cols;
        for (std::int64_t i = 0; i < cols; ++i) plane[i] += bp[c];
      }
    }
  }

  std::vector<Var> parents{input, weight};
  if (bias.valid()) parents.push_back(bias);
  return input.graph().record(
      "conv2d", std::move(out), parents, [input, weight, bias, geo, pointwise, cout](Graph& g, const Tensor& gout) {
        const Tensor& x = input.value();
        const Tensor& w = weight.value();
        Tensor* gx = grad_of(g, input);
        Tensor* gw = grad_of(g, weight);
        Tensor* gb = bias.valid() ? grad_of(g, bias) : nullptr;
        const std::int64_t rows = geo.rows(), cols = geo.cols();
        const std::int64_t in_plane = geo.channels * geo.in_h * geo.in_w;
        std::vector<Real> col(pointwise ? 0 : static_cast<std::size_t>(rows * cols));
        for (std::int64_t b = 0; b < x.dim(0); ++b) {
          const Real* go = gout.ptr() + b * cout * cols;
          if (gw) {
            const Real* colp = x.ptr() + b * in_plane;
            if (!pointwise) {
              detail::im2col(colp, geo, col.data());
              colp = col.data();
            }
            detail::gemm(false, true, cout, rows, cols, go, colp, gw->ptr(), true);
          }
          if (gx) {
            Real* gxb = gx->ptr() + b * in_plane;
            if (pointwise) {
              detail::gemm(true, false, rows, cols, cout, w.ptr(), go, gxb, true);
            } else {
              detail::gemm(true, false, rows, cols, cout, w.ptr(), go, col.data(), false);
              detail::col2im(col.data(), geo, gxb);
            }
          }
          if (gb) {
            for (std::int64_t c = 0; c < cout; ++c) {
              Real acc = 0;
              for (std::int64_t i = 0; i < cols; ++i) acc += go[c * cols + i];
              (*gb)[c] += acc;
            }
          }
        }
        if (gw && g_conv_weight_grad_offset != Real(0)) {
          for (auto& v : gw->data()) v += g_conv_weight_grad_offset;
        }
      });
}

Var deconv2d(Var input, Var weight, Var bias, const DeconvSpec& spec) {
  spec.validate();
  require_nchw(input, "deconv2d input");
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  require_rank(w, 4, "deconv2d weight");
  if (x.dim(1) != spec.in_channels) throw ShapeError(dim_msg("deconv2d", "input channels", spec.in_channels, x.dim(1)));
  if (w.dim(0) != spec.in_channels) throw ShapeError(dim_msg("deconv2d", "weight in-channels", spec.in_channels, w.dim(0)));
  if (w.dim(1) != spec.out_channels) throw ShapeError(dim_msg("deconv2d", "weight out-channels", spec.out_channels, w.dim(1)));
  if (w.dim(2) != spec.kernel || w.dim(3) != spec.kernel) throw ShapeError(dim_msg("deconv2d", "kernel size", spec.kernel, w.dim(2)));
  if (bias.valid() && bias.value().size() != spec.out_channels) {
    throw ShapeError(dim_msg("deconv2d", "bias length", spec.out_channels, bias.value().size()));
  }

  const std::int64_t n = x.dim(0), h = x.dim(2), wd = x.dim(3);
  const std::int64_t oh = deconv_output_size(h, spec), ow = deconv_output_size(wd, spec);
  if (oh < 1 || ow < 1) throw ShapeError("deconv2d output would be empty");
  // The transposed conv is the adjoint of a conv from the output grid back to the input grid.
  const detail::PatchGeometry geo{spec.out_channels, oh, ow, h, wd, spec.kernel, 1, spec.stride, spec.pad};
  const std::int64_t cin = spec.in_channels, cout = spec.out_channels;
  const std::int64_t rows = geo.rows(), cols = geo.cols();

  Tensor out({n, cout, oh, ow});
  std::vector<Real> col(static_cast<std::size_t>(rows * cols));
  for (std::int64_t b = 0; b < n; ++b) {
    detail::gemm(true, false, rows, cols, cin, w.ptr(), x.ptr() + b * cin * cols, col.data(), false);
    Real* ob = out.ptr() + b * cout * oh * ow;
    detail::col2im(col.data(), geo, ob);
    if (bias.valid()) {
      for (std::int64_t c = 0; c < cout; ++c) {
        const Real bv = bias.value()[c];
        Real* plane = ob + c * oh * ow;
        for (std::int64_t i = 0; i < oh * ow; ++i) plane[i] += bv;
      }
    }
  }

  std::vector<Var> parents{input, weight};
  if (bias.valid()) parents.push_back(bias);
  return input.graph().record(
      "deconv2d", std::move(out), parents, [input, weight, bias, geo, cin, cout](Graph& g, const Tensor& gout) {
        const Tensor& x = input.value();
        const Tensor& w = weight.value();
        Tensor* gx = grad_of(g, input);
        Tensor* gw = grad_of(g, weight);
        Tensor* gb = bias.valid() ? grad_of(g, bias) : nullptr;
        const std::int64_t rows = geo.rows(), cols = geo.cols();
        const std::int64_t out_plane = geo.in_h * geo.in_w;
        std::vector<Real> col(static_cast<std::size_t>(rows * cols));
        for (std::int64_t b = 0; b < x.dim(0); ++b) {
          const Real* go = gout.ptr() + b * cout * out_plane;
          if (gx || gw) detail::im2col(go, geo, col.data());
          if (gx) detail::gemm(false, false, cin, cols, rows, w.ptr(), col.data(), gx->ptr() + b * cin * cols, true);
          if (gw) detail::gemm(false, true, cin, rows, cols, x.ptr() + b * cin * cols, col.data(), gw->ptr(), true);
          if (gb) {
            for (std::int64_t c = 0; c < cout; ++c) {
              Real acc = 0;
              for (std::int64_t i = 0; i < out_plane; ++i) acc += go[c * out_plane + i];
              (*gb)[c] += acc;
            }
          }
        }
      });
}

Var elu(Var x, Real alpha) {
  if (!(alpha > 0)) throw ConfigError("elu alpha must be positive");
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.size(); ++i) {
    const Real v = in[i];
    out[i] = v >= 0 ? v : alpha * std::expm1(v);
  }
  return x.graph().record("elu", std::move(out), {x}, [x, alpha](Graph& g, const Tensor& gout) {
    Tensor* gx = grad_of(g, x);
    if (!gx) return;
    const Tensor& in = x.value();
    for (std::int64_t i = 0; i < in.size(); ++i) {
      const Real v = in[i];
      (*gx)[i] += gout[i] * (v >= 0 ? Real(1) : alpha * std::exp(v));
    }
  });
}

Var maxpool2d(Var input, int kernel, int stride) {
  require_nchw(input, "maxpool2d input");
  if (kernel < 1 || stride < 1) throw ConfigError("maxpool2d kernel and stride must be >= 1");
  const Tensor& x = input.value();
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (kernel > h || kernel > w) {
    throw ConfigError("maxpool2d kernel " + std::to_string(kernel) + " larger than input " + std::to_string(h) + "x" +
                      std::to_string(w));
  }
  const std::int64_t oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  Tensor out({n, c, oh, ow});
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.size()));
  for (std::int64_t p = 0; p < n * c; ++p) {
    const Real* plane = x.ptr() + p * h * w;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        std::int64_t best = (oy * stride) * w + ox * stride;
        for (std::int64_t ky = 0; ky < kernel; ++ky) {
          const std::int64_t row = (oy * stride + ky) * w + ox * stride;
          for (std::int64_t kx = 0; kx < kernel; ++kx) {
            if (plane[row + kx] > plane[best]) best = row + kx;
          }
        }
        const std::int64_t o = (p * oh + oy) * ow + ox;
        out[o] = plane[best];
        argmax[static_cast<std::size_t>(o)] = p * h * w + best;
      }
    }
  }
  return input.graph().record("maxpool2d", std::move(out), {input},
                              [input, argmax = std::move(argmax)](Graph& g, const Tensor& gout) {
                                Tensor* gx = grad_of(g, input);
                                if (!gx) return;
                                for (std::size_t o = 0; o < argmax.size(); ++o) {
                                  (*gx)[argmax[o]] += gout[static_cast<std::int64_t>(o)];
                                }
                              });
}

Var resize_bilinear(Var input, std::int64_t out_h, std::int64_t out_w) {
  require_nchw(input, "resize_bilinear input");
  if (out_h < 1 || out_w < 1) throw ConfigError("resize_bilinear target must be positive");
  const Tensor& x = input.value();
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  auto ty = make_taps(h, out_h);
  auto tx = make_taps(w, out_w);
  Tensor out({x.dim(0), x.dim(1), out_h, out_w});
  for (std::int64_t p = 0; p < planes; ++p) {
    const Real* src = x.ptr() + p * h * w;
    Real* dst = out.ptr() + p * out_h * out_w;
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      const auto yi = static_cast<std::size_t>(oy);
      const Real ly = ty.w1[yi];
      const Real* r0 = src + ty.i0[yi] * w;
      const Real* r1 = src + ty.i1[yi] * w;
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        const auto xi = static_cast<std::size_t>(ox);
        const Real lx = tx.w1[xi];
        const Real top = (1 - lx) * r0[tx.i0[xi]] + lx * r0[tx.i1[xi]];
        const Real bot = (1 - lx) * r1[tx.i0[xi]] + lx * r1[tx.i1[xi]];
        dst[oy * out_w + ox] = (1 - ly) * top + ly * bot;
      }
    }
  }
  return input.graph().record(
      "resize_bilinear", std::move(out), {input},
      [input, ty = std::move(ty), tx = std::move(tx), out_h, out_w](Graph& g, const Tensor& gout) {
        Tensor* gx = grad_of(g, input);
        if (!gx) return;
        const Tensor& x = input.value();
        const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
        for (std::int64_t p = 0; p < planes; ++p) {
          Real* dst = gx->ptr() + p * h * w;
          const Real* src = gout.ptr() + p * out_h * out_w;
          for (std::int64_t oy = 0; oy < out_h; ++oy) {
            const auto yi = static_cast<std::size_t>(oy);
            const Real ly = ty.w1[yi];
            Real* r0 = dst + ty.i0[yi] * w;
            Real* r1 = dst + ty.i1[yi] * w;
            for (std::int64_t ox = 0; ox < out_w; ++ox) {
              const auto xi = static_cast<std::size_t>(ox);
              const Real lx = tx.w1[xi];
              const Real gv = src[oy * out_w + ox];
              r0[tx.i0[xi]] += (1 - ly) * (1 - lx) * gv;
              r0[tx.i1[xi]] += (1 - ly) * lx * gv;
              r1[tx.i0[xi]] += ly * (1 - lx) * gv;
              r1[tx.i1[xi]] += ly * lx * gv;
            }
          }
        }
      });
}

Var upsample_bilinear(Var input, int factor) {
  if (factor < 2) throw ConfigError("upsample factor must be >= 2, got " + std::to_string(factor));
  require_nchw(input, "upsample_bilinear input");
  return resize_bilinear(input, input.dim(2) * factor, input.dim(3) * factor);
}

Var concat_channels(const std::vector<Var>& inputs) {
  if (inputs.empty()) throw ConfigError("concat_channels needs at least one input");
  const Tensor& first = inputs.front().value();
  require_rank(first, 4, "concat_channels input");
  std::int64_t channels = 0;
  for (const auto& v : inputs) {
    const Tensor& t = v.value();
    require_rank(t, 4, "concat_channels input");
    if (t.dim(0) != first.dim(0) || t.dim(2) != first.dim(2) || t.dim(3) != first.dim(3)) {
      throw ShapeError("concat_channels: spatial/batch mismatch " + shape_str(first.shape()) + " vs " +
                       shape_str(t.shape()));
    }
    channels += t.dim(1);
  }
  const std::int64_t n = first.dim(0), plane = first.dim(2) * first.dim(3);
  Tensor out({n, channels, first.dim(2), first.dim(3)});
  std::int64_t offset = 0;
  for (const auto& v : inputs) {
    const Tensor& t = v.value();
    for (std::int64_t b = 0; b < n; ++b) {
      std::copy_n(t.ptr() + b * t.dim(1) * plane, t.dim(1) * plane, out.ptr() + (b * channels + offset) * plane);
    }
    offset += t.dim(1);
  }
  return inputs.front().graph().record(
      "concat_channels", std::move(out), inputs, [inputs, channels, plane, n](Graph& g, const Tensor& gout) {
        std::int64_t offset = 0;
        for (const auto& v : inputs) {
          const std::int64_t c = v.dim(1);
          if (Tensor* gx = grad_of(g, v)) {
            for (std::int64_t b = 0; b < n; ++b) {
              const Real* src = gout.ptr() + (b * channels + offset) * plane;
              Real* dst = gx->ptr() + b * c * plane;
              for (std::int64_t i = 0; i < c * plane; ++i) dst[i] += src[i];
            }
          }
          offset += c;
        }
      });
}

Var slice_channels(Var input, std::int64_t begin, std::int64_t end) {
  require_nchw(input, "slice_channels input");
  const Tensor& x = input.value();
  if (begin < 0 || end > x.dim(1) || begin >= end) throw ShapeError("slice_channels: range out of bounds");
  const std::int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3), k = end - begin;
  Tensor out({n, k, x.dim(2), x.dim(3)});
  for (std::int64_t b = 0; b < n; ++b) {
    std::copy_n(x.ptr() + (b * c + begin) * plane, k * plane, out.ptr() + b * k * plane);
  }
  return input.graph().record("slice_channels", std::move(out), {input},
                              [input, n, c, plane, k, begin](Graph& g, const Tensor& gout) {
                                Tensor* gx = grad_of(g, input);
                                if (!gx) return;
                                for (std::int64_t b = 0; b < n; ++b) {
                                  Real* dst = gx->ptr() + (b * c + begin) * plane;
                                  const Real* src = gout.ptr() + b * k * plane;
                                  for (std::int64_t i = 0; i < k * plane; ++i) dst[i] += src[i];
                                }
                              });
}

Var pad_bottom_right(Var input, std::int64_t bottom, std::int64_t right) {
  require_nchw(input, "pad input");
  if (bottom < 0 || right < 0) throw ConfigError("padding must be non-negative");
  const Tensor& x = input.value();
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = h + bottom, ow = w + right;
  Tensor out({x.dim(0), x.dim(1), oh, ow});
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t y = 0; y < h; ++y) std::copy_n(x.ptr() + (p * h + y) * w, w, out.ptr() + (p * oh + y) * ow);
  }
  return input.graph().record("pad", std::move(out), {input}, [input, planes, h, w, oh, ow](Graph& g, const Tensor& gout) {
    Tensor* gx = grad_of(g, input);
    if (!gx) return;
    for (std::int64_t p = 0; p < planes; ++p) {
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) (*gx)[(p * h + y) * w + x] += gout[(p * oh + y) * ow + x];
      }
    }
  });
}

Var crop(Var input, std::int64_t y0, std::int64_t x0, std::int64_t ch, std::int64_t cw) {
  require_nchw(input, "crop input");
  const Tensor& x = input.value();
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (y0 < 0 || x0 < 0 || ch < 1 || cw < 1 || y0 + ch > h || x0 + cw > w) {
    throw ShapeError("crop window out of bounds for " + shape_str(x.shape()));
  }
  Tensor out({x.dim(0), x.dim(1), ch, cw});
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t y = 0; y < ch; ++y) {
      std::copy_n(x.ptr() + (p * h + y0 + y) * w + x0, cw, out.ptr() + (p * ch + y) * cw);
    }
  }
  return input.graph().record("crop", std::move(out), {input},
                              [input, planes, h, w, y0, x0, ch, cw](Graph& g, const Tensor& gout) {
                                Tensor* gx = grad_of(g, input);
                                if (!gx) return;
                                for (std::int64_t p = 0; p < planes; ++p) {
                                  for (std::int64_t y = 0; y < ch; ++y) {
                                    for (std::int64_t x = 0; x < cw; ++x) {
                                      (*gx)[(p * h + y0 + y) * w + x0 + x] += gout[(p * ch + y) * cw + x];
                                    }
                                  }
                                }
                              });
}

namespace {
void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}
}  // namespace

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph().record("add", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& gout) {
    for (const Var& v : {a, b}) {
      if (Tensor* gx = grad_of(g, v)) {
        for (std::int64_t i = 0; i < gout.size(); ++i) (*gx)[i] += gout[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.graph().record("sub", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& gout) {
    if (Tensor* ga = grad_of(g, a)) {
      for (std::int64_t i = 0; i < gout.size(); ++i) (*ga)[i] += gout[i];
    }
    if (Tensor* gb = grad_of(g, b)) {
      for (std::int64_t i = 0; i < gout.size(); ++i) (*gb)[i] -= gout[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph().record("mul", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& gout) {
    if (Tensor* ga = grad_of(g, a)) {
      const Tensor& bv = b.value();
      for (std::int64_t i = 0; i < gout.size(); ++i) (*ga)[i] += gout[i] * bv[i];
    }
    if (Tensor* gb = grad_of(g, b)) {
      const Tensor& av = a.value();
      for (std::int64_t i = 0; i < gout.size(); ++i) (*gb)[i] += gout[i] * av[i];
    }
  });
}

Var scale(Var a, Real s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= s;
  return a.graph().record("scale", std::move(out), {a}, [a, s](Graph& g, const Tensor& gout) {
    if (Tensor* ga = grad_of(g, a)) {
      for (std::int64_t i = 0; i < gout.size(); ++i) (*ga)[i] += gout[i] * s;
    }
  });
}

Var sum(Var a) {
  double acc = 0;
  for (Real v : a.value().data()) acc += v;
  return a.graph().record("sum", Tensor::scalar(static_cast<Real>(acc)), {a}, [a](Graph& g, const Tensor& gout) {
    if (Tensor* ga = grad_of(g, a)) {
      for (auto& v : ga->data()) v += gout[0];
    }
  });
}

Var mean(Var a) { return scale(sum(a), Real(1) / static_cast<Real>(a.value().size())); }

Var weighted_sum(Var a, const Tensor& weights) {
  if (a.shape() != weights.shape()) throw ShapeError("weighted_sum: weight shape mismatch");
  double acc = 0;
  const Tensor& av = a.value();
  for (std::int64_t i = 0; i < av.size(); ++i) acc += static_cast<double>(av[i]) * weights[i];
  return a.graph().record("weighted_sum", Tensor::scalar(static_cast<Real>(acc)), {a},
                          [a, weights](Graph& g, const Tensor& gout) {
                            if (Tensor* ga = grad_of(g, a)) {
                              for (std::int64_t i = 0; i < weights.size(); ++i) (*ga)[i] += gout[0] * weights[i];
                            }
                          });
}

}  // namespace ops
}  // namespace disco::inline DISCO_ABI
