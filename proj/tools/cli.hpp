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

#include <iosfwd>
#include <string>
#include <vector>

namespace disco::cli {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad flags, unknown command or op name
  kExitConfig = 2,   // invalid configuration or shape mismatch
  kExitData = 3,     // unreadable or malformed input files
  kExitNumeric = 4,  // non-finite values, failed gradient checks
};

// Parses `args` (without the program name) and runs one command. All
// errors are reported on `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct GradcheckOptions {
  std::string op = "all";
  int seeds = 20;
  double tolerance = 1e-4;
  // Test hook: constant added to every conv2d weight gradient.
  double perturb_weight_grad = 0;
};

// Double-precision finite-difference suites; prints one row per op.
int gradcheck_command(const GradcheckOptions& options, std::ostream& out);

}  // namespace disco::cli
