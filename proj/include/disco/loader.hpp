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
#include <map>
#include <string>
#include <vector>

#include "disco/config.hpp"
#include "disco/data.hpp"
#include "disco/io.hpp"

namespace disco::inline DISCO_ABI {

// Where samples come from: a procedural generator or a manifest on disk.
struct DatasetSpec {
  enum class Kind { kGenerator, kManifest };
  Kind kind = Kind::kGenerator;
  std::string manifest;
  RdsConfig rds;
  // Generator only: number of distinct samples, 0 for an unbounded stream.
  std::int64_t count = 0;

  static DatasetSpec generator(RdsConfig rds, std::int64_t count);
  static DatasetSpec from_manifest(std::string path);
};

class Dataset {
 public:
  explicit Dataset(DatasetSpec spec);

  // 0 for an unbounded generator stream.
  std::int64_t size() const { return size_; }
  bool unbounded() const { return size_ == 0; }
  const DatasetSpec& spec() const { return spec_; }
  // Sample i; generated samples use seed mix_seed(rds.seed, i).
  StereoSample get(std::int64_t index) const;

 private:
  DatasetSpec spec_;
  std::vector<ManifestEntry> entries_;
  std::int64_t size_ = 0;
};

struct Batch {
  Tensor left;   // [B, C, H, W]
  Tensor right;  // [B, C, H, W]
  Tensor gt;     // [B, 1, H, W]
  Tensor mask;   // [B, 1, H, W]
  std::vector<std::int64_t> indices;

  std::int64_t size() const { return left.dim(0); }
};

Batch stack_samples(const std::vector<StereoSample>& samples);
Batch make_batch(const StereoSample& sample);

// Deterministic batch stream. batch(i) is a pure function of (spec, batch
// size, seed, i): epoch e is a seeded permutation of the dataset, the last
// batch of an epoch may be short, and augmentation seeds derive from
// (seed, epoch, sample). Finite datasets are cached in memory.
class BatchLoader {
 public:
  BatchLoader(DatasetSpec spec, int batch_size, std::uint64_t seed, AugmentConfig augment = {}, bool shuffle = true);

  const Dataset& dataset() const { return dataset_; }
  int batch_size() const { return batch_size_; }
  // 0 for unbounded streams.
  std::int64_t batches_per_epoch() const;
  std::vector<std::int64_t> epoch_order(std::int64_t epoch) const;
  std::vector<std::int64_t> batch_indices(std::int64_t iteration) const;
  Batch batch(std::int64_t iteration);

 private:
  const StereoSample& cached(std::int64_t index);

  Dataset dataset_;
  int batch_size_;
  std::uint64_t seed_;
  AugmentConfig augment_;
  bool shuffle_;
  std::map<std::int64_t, StereoSample> cache_;
};

}  // namespace disco::inline DISCO_ABI
