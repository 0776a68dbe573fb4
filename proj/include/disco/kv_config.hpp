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

namespace disco {

// Flat "key = value" text with dotted section prefixes (model., optim., data.).
// '#' starts a comment. Later assignments override earlier ones.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text, const std::string& source = "<string>");
  static KvConfig load(const std::string& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  // Groups separated by ';', entries by ','.
  std::vector<std::vector<int>> get_int_lists(const std::string& key, const std::vector<std::vector<int>>& fallback) const;
  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;

  // Keys under `prefix` with the prefix stripped.
  KvConfig section(const std::string& prefix) const;
  // Canonical text form, keys sorted.
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string join_ints(const std::vector<int>& values);
std::string join_int_lists(const std::vector<std::vector<int>>& values);
std::string join_doubles(const std::vector<double>& values);
// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace disco
