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

// Acceptance criteria runner shared declarations.

#pragma once

#include <string>
#include <vector>

namespace disco::acceptance {

struct Outcome {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

// Double-precision criteria (separate translation unit).
Outcome gradient_suite();
Outcome oracle_equivalence();

Outcome receptive_fields();
Outcome architecture_audit();
Outcome geometric_consistency();
Outcome overfit();
// Criteria 7 and 8 share one pair of training runs.
std::vector<Outcome> generalization_and_ablation();
Outcome metric_exactness();
Outcome io_exactness();

}  // namespace disco::acceptance
