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

#include "disco/params.hpp"

#include <cmath>

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

void ParamStore::add(const std::string& path, Tensor value) {
  if (!params_.emplace(path, std::move(value)).second) throw ConfigError("duplicate parameter '" + path + "'");
}

const Tensor& ParamStore::get(const std::string& path) const {
  auto it = params_.find(path);
  if (it == params_.end()) throw ConfigError("missing parameter '" + path + "'");
  return it->second;
}

Tensor& ParamStore::get_mut(const std::string& path) {
  auto it = params_.find(path);
  if (it == params_.end()) throw ConfigError("missing parameter '" + path + "'");
  return it->second;
}

std::int64_t ParamStore::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParamBuilder::he_normal(const std::string& name, Shape shape, std::int64_t fan_in, double gain) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  // Draw even when gain is zero so later parameters see the same stream.
  for (auto& v : t.data()) v = static_cast<Real>(gain * dist(*rng_));
  store_->add(prefix_ + name, std::move(t));
}

void ParamBuilder::zeros(const std::string& name, Shape shape) { store_->add(prefix_ + name, Tensor(std::move(shape))); }

void ParamBuilder::conv(const ConvSpec& spec, double gain) {
  spec.validate();
  he_normal("weight", {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
            static_cast<std::int64_t>(spec.in_channels) * spec.kernel * spec.kernel, gain);
  zeros("bias", {spec.out_channels});
}

Tensor& ParamBuilder::declared(const std::string& name) const { return store_->get_mut(prefix_ + name); }

void ParamBuilder::deconv(const DeconvSpec& spec, double gain) {
  spec.validate();
  // Each output pixel of a stride-s transposed conv sees about Cin * (k/s)^2 taps.
  const std::int64_t taps = std::max<std::int64_t>(1, (spec.kernel / spec.stride) * (spec.kernel / spec.stride));
  he_normal("weight", {spec.in_channels, spec.out_channels, spec.kernel, spec.kernel}, spec.in_channels * taps, gain);
  zeros("bias", {spec.out_channels});
}

Var ParamScope::get(const std::string& name) const {
  const std::string path = prefix_ + name;
  return graph_->param(path, store_->get(path));
}

Var ParamScope::conv(Var x, const ConvSpec& spec) const { return ops::conv2d(x, get("weight"), get("bias"), spec); }

Var ParamScope::deconv(Var x, const DeconvSpec& spec) const {
  return ops::deconv2d(x, get("weight"), get("bias"), spec);
}

}  // namespace disco::inline DISCO_ABI
