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

#include "disco/loader.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "disco/errors.hpp"

namespace disco::inline DISCO_ABI {

DatasetSpec DatasetSpec::generator(RdsConfig rds, std::int64_t count) {
  DatasetSpec s;
  s.kind = Kind::kGenerator;
  s.rds = rds;
  s.count = count;
  return s;
}

DatasetSpec DatasetSpec::from_manifest(std::string path) {
  DatasetSpec s;
  s.kind = Kind::kManifest;
  s.manifest = std::move(path);
  return s;
}

Dataset::Dataset(DatasetSpec spec) : spec_(std::move(spec)) {
  if (spec_.kind == DatasetSpec::Kind::kManifest) {
    entries_ = read_manifest(spec_.manifest);
    size_ = static_cast<std::int64_t>(entries_.size());
    if (size_ == 0) throw ConfigError("dataset manifest '" + spec_.manifest + "' lists no samples");
  } else {
    spec_.rds.validate();
    if (spec_.count < 0) throw ConfigError("dataset sample count must be >= 0");
    size_ = spec_.count;
  }
}

StereoSample Dataset::get(std::int64_t index) const {
  if (index < 0 || (size_ > 0 && index >= size_)) {
    throw UsageError("sample index " + std::to_string(index) + " out of range [0, " + std::to_string(size_) + ")");
  }
  if (spec_.kind == DatasetSpec::Kind::kGenerator) {
    RdsConfig c = spec_.rds;
    c.seed = mix_seed(spec_.rds.seed, static_cast<std::uint64_t>(index));
    return generate_rds(c);
  }
  const ManifestEntry& e = entries_[static_cast<std::size_t>(index)];
  StereoSample s;
  s.left = read_image(e.left);
  s.right = read_image(e.right);
  PfmImage gt = read_pfm(e.gt);
  if (gt.data.dim(0) != 1) throw DataError(e.gt + ": ground truth must be single-channel");
  s.gt = std::move(gt.data);
  // Non-positive or non-finite entries mark pixels without ground truth.
  s.mask = Tensor::zeros(s.gt.shape());
  for (std::int64_t i = 0; i < s.gt.size(); ++i) {
    if (s.gt[i] > 0) {
      s.mask[i] = 1;
    } else {
      s.gt[i] = 0;
    }
  }
  try {
    s.validate();
  } catch (const ConfigError& err) {
    throw DataError(e.left + ": " + err.what());
  }
  return s;
}

Batch stack_samples(const std::vector<StereoSample>& samples) {
  if (samples.empty()) throw UsageError("cannot stack an empty batch");
  const StereoSample& first = samples.front();
  first.validate();
  const auto n = static_cast<std::int64_t>(samples.size());
  const std::int64_t c = first.channels(), h = first.height(), w = first.width();
  Batch b{Tensor({n, c, h, w}), Tensor({n, c, h, w}), Tensor({n, 1, h, w}), Tensor({n, 1, h, w}), {}};
  for (std::int64_t i = 0; i < n; ++i) {
    const StereoSample& s = samples[static_cast<std::size_t>(i)];
    s.validate();
    if (s.left.shape() != first.left.shape()) {
      throw ShapeError("batch mixes sample shapes " + shape_str(first.left.shape()) + " and " +
                       shape_str(s.left.shape()) + "; configure a crop");
    }
    std::copy(s.left.data().begin(), s.left.data().end(), b.left.ptr() + i * c * h * w);
    std::copy(s.right.data().begin(), s.right.data().end(), b.right.ptr() + i * c * h * w);
    std::copy(s.gt.data().begin(), s.gt.data().end(), b.gt.ptr() + i * h * w);
    std::copy(s.mask.data().begin(), s.mask.data().end(), b.mask.ptr() + i * h * w);
  }
  return b;
}

Batch make_batch(const StereoSample& sample) { return stack_samples({sample}); }

BatchLoader::BatchLoader(DatasetSpec spec, int batch_size, std::uint64_t seed, AugmentConfig augment, bool shuffle)
    : dataset_(std::move(spec)), batch_size_(batch_size), seed_(seed), augment_(augment), shuffle_(shuffle) {
  if (batch_size_ < 1) throw ConfigError("batch size must be >= 1");
  if (augment_.enabled) augment_.validate();
}

std::int64_t BatchLoader::batches_per_epoch() const {
  if (dataset_.unbounded()) return 0;
  return (dataset_.size() + batch_size_ - 1) / batch_size_;
}

std::vector<std::int64_t> BatchLoader::epoch_order(std::int64_t epoch) const {
  std::vector<std::int64_t> order(static_cast<std::size_t>(dataset_.size()));
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_) {
    // Fisher-Yates with an explicit index draw keeps the order library-independent.
    std::mt19937_64 rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  }
  return order;
}

std::vector<std::int64_t> BatchLoader::batch_indices(std::int64_t iteration) const {
  if (iteration < 0) throw UsageError("negative iteration");
  std::vector<std::int64_t> idx;
  if (dataset_.unbounded()) {
    for (int i = 0; i < batch_size_; ++i) idx.push_back(iteration * batch_size_ + i);
    return idx;
  }
  const std::int64_t per_epoch = batches_per_epoch();
  const std::int64_t epoch = iteration / per_epoch, pos = iteration % per_epoch;
  const std::vector<std::int64_t> order = epoch_order(epoch);
  const std::int64_t begin = pos * batch_size_;
  const std::int64_t end = std::min<std::int64_t>(begin + batch_size_, dataset_.size());
  for (std::int64_t i = begin; i < end; ++i) idx.push_back(order[static_cast<std::size_t>(i)]);
  return idx;
}

const StereoSample& BatchLoader::cached(std::int64_t index) {
  auto it = cache_.find(index);
  if (it != cache_.end()) return it->second;
  if (dataset_.unbounded()) {
    // Streams never revisit a sample; keep the cache from growing.
    cache_.clear();
  }
  return cache_.emplace(index, dataset_.get(index)).first->second;
}

Batch BatchLoader::batch(std::int64_t iteration) {
  const std::vector<std::int64_t> idx = batch_indices(iteration);
  const std::int64_t epoch = dataset_.unbounded() ? 0 : iteration / batches_per_epoch();
  std::vector<StereoSample> samples;
  samples.reserve(idx.size());
  for (std::int64_t i : idx) {
    const StereoSample& s = cached(i);
    if (augment_.enabled) {
      const std::uint64_t aug_seed = mix_seed(mix_seed(seed_, static_cast<std::uint64_t>(epoch)), static_cast<std::uint64_t>(i));
      samples.push_back(augment(s, augment_, aug_seed));
    } else {
      samples.push_back(s);
    }
  }
  Batch b = stack_samples(samples);
  b.indices = idx;
  return b;
}

}  // namespace disco::inline DISCO_ABI
