// Copyright 2026 The evcoref Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Central finite-difference check of the scorer's analytic gradients.

#ifndef EVCOREF_GRADCHECK_H_
#define EVCOREF_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "evcoref/scorer.h"

namespace evcoref {

struct GradCheckConfig {
  int mentions = 5;         // random mentions per mini-batch
  int pairs = 6;            // pair examples drawn from them
  int max_coordinates = 64; // sampled coordinates per block
  double step = 1e-5;
  double tolerance = 1e-4;
  double dropout = 0.3;
  // Test hook: perturbs the analytic gradient so the check must fail.
  bool corrupt_gradient = false;
};

// Relative error ||analytic - numeric|| / (||analytic|| + ||numeric||) over
// the checked coordinates; 0 when both norms are 0. Coordinates whose relu or
// clamp pattern changes within +-step are skipped.
struct BlockCheck {
  std::string block;
  double relative_error = 0.0;
  size_t checked = 0;
  size_t skipped = 0;
  bool pass = true;
};

struct GradCheckReport {
  uint64_t seed = 0;
  ScorerMode mode = ScorerMode::kIntra;
  std::vector<BlockCheck> blocks;
  double max_relative_error = 0.0;
  bool pass = true;
};

// Random parameters and a random mini-batch (spans of 1..max_width_bucket+2
// tokens, 0..5 inferences per relation), both derived from `seed`.
GradCheckReport CheckGradients(const ModelDims &dims, uint64_t seed,
                               const GradCheckConfig &config);

}  // namespace evcoref

#endif  // EVCOREF_GRADCHECK_H_
