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

// Compiled with DISCO_DOUBLE: gradient checks always run in double precision.

#include <cstdio>
#include <ostream>

#include "cli.hpp"
#include "disco/errors.hpp"
#include "disco/gradcheck.hpp"
#include "disco/ops.hpp"

namespace disco::cli {

static_assert(sizeof(Real) == 8, "gradient checks need the double-precision build");

int gradcheck_command(const GradcheckOptions& options, std::ostream& out) {
  std::vector<std::string> ops;
  if (options.op == "all") {
    ops = gradcheck_suite_names();
  } else {
    ops.push_back(options.op);
  }
  if (options.seeds < 1) throw UsageError("--seeds must be >= 1");

  struct Reset {
    ~Reset() { testing::set_conv_weight_grad_offset(0); }
  } reset;
  testing::set_conv_weight_grad_offset(static_cast<Real>(options.perturb_weight_grad));

  char line[160];
  std::snprintf(line, sizeof(line), "%-20s %6s %14s  %s\n", "op", "seeds", "max_rel_error", "result");
  out << line;
  bool all_passed = true;
  for (const std::string& op : ops) {
    const GradCheckRow row = run_gradcheck_suite(op, options.seeds, options.tolerance);
    all_passed = all_passed && row.passed;
    std::snprintf(line, sizeof(line), "%-20s %6d %14.3e  %s\n", row.op.c_str(), row.seeds, row.max_rel_error,
                  row.passed ? "PASS" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof(line), "tolerance %.1e: %s\n", options.tolerance, all_passed ? "all passed" : "FAILED");
  out << line;
  return all_passed ? kExitOk : kExitNumeric;
}

}  // namespace disco::cli
