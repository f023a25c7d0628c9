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

// Internal file helpers shared by the readers and writers.

#ifndef EVCOREF_SRC_FILE_UTIL_H_
#define EVCOREF_SRC_FILE_UTIL_H_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "evcoref/errors.h"

namespace evcoref {
namespace internal {

// Readers never observe a partially written file.
inline void AtomicWrite(const std::filesystem::path &path,
                        const std::string &bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << bytes;
    out.flush();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string ReadFileBytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace internal
}  // namespace evcoref

#endif  // EVCOREF_SRC_FILE_UTIL_H_
