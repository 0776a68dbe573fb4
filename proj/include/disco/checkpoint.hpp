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
#include <string>

#include "disco/config.hpp"
#include "disco/kv_config.hpp"
#include "disco/model.hpp"
#include "disco/train.hpp"

namespace disco::inline DISCO_ABI {

// Binary container, all integers little-endian:
//   "DISCOCKP" | u32 version | u32 value bytes (4 or 8)
//   u64 text length | run configuration as key = value text (model.* included)
//   u64 iteration | u64 param count
//   per param: u32 path length | path | u32 rank | i64 dims... | raw values
//   u64 adam steps | u8 has moments | per param (same order): m values, v values
struct Checkpoint {
  KvConfig config;
  ParamStore params;
  std::int64_t iteration = 0;
  std::int64_t adam_steps = 0;
  std::map<std::string, AdamSlot> adam_state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Snapshot of a model plus optimizer; `extra` carries the rest of the run config.
Checkpoint make_checkpoint(const DiscoModel& model, const Adam& adam, std::int64_t iteration, const KvConfig& extra = {});
// Rebuilds the model from the embedded config and validates every shape.
DiscoModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace disco::inline DISCO_ABI
