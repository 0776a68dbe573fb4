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

#include "disco/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "disco/errors.hpp"
#include "disco/io.hpp"

namespace disco::inline DISCO_ABI {

namespace {

constexpr char kMagic[8] = {'D', 'I', 'S', 'C', 'O', 'C', 'K', 'P'};

template <class T>
void put(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

void put_values(std::string& out, const Tensor& t) {
  for (Real v : t.data()) {
    if constexpr (sizeof(Real) == 4) {
      put(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
    }
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin) : b_(bytes), origin_(std::move(origin)) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Tensor values(Shape shape, std::uint32_t width, const char* what) {
    Tensor t(std::move(shape));
    for (Real& v : t.data()) {
      if (width == 4) {
        v = static_cast<Real>(std::bit_cast<float>(get<std::uint32_t>(what)));
      } else {
        v = static_cast<Real>(std::bit_cast<double>(get<std::uint64_t>(what)));
      }
    }
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(origin_ + ": byte offset " + std::to_string(pos_) + ": " + msg);
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }

  const std::string& b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(Real));
  const std::string text = c.config.to_string();
  put<std::uint64_t>(out, text.size());
  out += text;
  put<std::uint64_t>(out, static_cast<std::uint64_t>(c.iteration));
  put<std::uint64_t>(out, c.params.size());
  for (const auto& [path, t] : c.params.all()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(path.size()));
    out += path;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::int64_t d : t.shape()) put<std::int64_t>(out, d);
    put_values(out, t);
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(c.adam_steps));
  const bool moments = !c.adam_state.empty();
  put<std::uint8_t>(out, moments ? 1 : 0);
  if (moments) {
    for (const auto& [path, t] : c.params.all()) {
      auto it = c.adam_state.find(path);
      if (it == c.adam_state.end()) {
        put_values(out, Tensor::zeros(t.shape()));
        put_values(out, Tensor::zeros(t.shape()));
      } else {
        put_values(out, it->second.m);
        put_values(out, it->second.v);
      }
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (r.bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) r.fail("not a checkpoint file (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  const auto width = r.get<std::uint32_t>("value width");
  if (width != 4 && width != 8) r.fail("unsupported value width " + std::to_string(width));
  Checkpoint c;
  const auto text_len = r.get<std::uint64_t>("config length");
  c.config = KvConfig::parse(r.bytes(static_cast<std::size_t>(text_len), "config text"), origin);
  c.iteration = static_cast<std::int64_t>(r.get<std::uint64_t>("iteration"));
  const auto count = r.get<std::uint64_t>("parameter count");
  std::vector<std::string> order;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>("path length");
    std::string path = r.bytes(len, "path");
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank == 0 || rank > 8) r.fail("parameter '" + path + "' has invalid rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.get<std::int64_t>("dimension");
      if (d <= 0) r.fail("parameter '" + path + "' has non-positive dimension");
      shape.push_back(d);
    }
    Tensor t = r.values(shape, width, "parameter values");
    c.params.add(path, std::move(t));
    order.push_back(std::move(path));
  }
  c.adam_steps = static_cast<std::int64_t>(r.get<std::uint64_t>("adam steps"));
  if (r.get<std::uint8_t>("moment flag") != 0) {
    for (const std::string& path : order) {
      const Shape& shape = c.params.get(path).shape();
      AdamSlot slot;
      slot.m = r.values(shape, width, "adam moments");
      slot.v = r.values(shape, width, "adam moments");
      c.adam_state.emplace(path, std::move(slot));
    }
  }
  if (!r.done()) r.fail("trailing bytes after checkpoint payload");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) { write_file(path, encode_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path), path); }

Checkpoint make_checkpoint(const DiscoModel& model, const Adam& adam, std::int64_t iteration, const KvConfig& extra) {
  Checkpoint c;
  c.config = extra;
  model.config().write(c.config);
  c.params = model.params();
  c.iteration = iteration;
  c.adam_steps = adam.steps();
  c.adam_state = adam.state();
  return c;
}

DiscoModel model_from_checkpoint(const Checkpoint& ckpt) {
  return DiscoModel(ModelConfig::read(ckpt.config), ckpt.params);
}

}  // namespace disco::inline DISCO_ABI
