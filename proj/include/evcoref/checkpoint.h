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

// Binary checkpoint container for scorer parameters.
//
//   magic     8 bytes  "EVCKPT\0\x01"
//   u32       header length, then a JSON header
//             {version, d, d_len, d_a, h, max_width_bucket, mode}
//   u32       block count
//   per block u32 name length, name, u32 rows, u32 cols,
//             rows * cols float64 values, column-major
//
// All integers and reals are little-endian.

#ifndef EVCOREF_CHECKPOINT_H_
#define EVCOREF_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "evcoref/scorer.h"

namespace evcoref {

void WriteCheckpoint(const ModelParameters &params, std::ostream &out);
void SaveCheckpoint(const ModelParameters &params,
                    const std::filesystem::path &path);

// When `expected` is given, a header that disagrees with it is rejected with
// ConfigError.
ModelParameters ReadCheckpoint(std::istream &in,
                               const ModelDims *expected = nullptr);
ModelParameters LoadCheckpoint(const std::filesystem::path &path,
                               const ModelDims *expected = nullptr);

// Hex digest of the checkpoint file bytes.
std::string CheckpointFingerprint(const std::filesystem::path &path);

}  // namespace evcoref

#endif  // EVCOREF_CHECKPOINT_H_
