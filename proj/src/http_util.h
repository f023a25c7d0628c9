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

// Internal helpers for the HTTP service clients.

#ifndef EVCOREF_SRC_HTTP_UTIL_H_
#define EVCOREF_SRC_HTTP_UTIL_H_

#include <string>
#include <utility>

#include "evcoref/errors.h"

namespace evcoref {
namespace internal {

// Splits "http://host:port/path" into ("http://host:port", "/path").
inline std::pair<std::string, std::string> SplitEndpoint(
    const std::string &endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint must include a scheme: " + endpoint);
  }
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace internal
}  // namespace evcoref

#endif  // EVCOREF_SRC_HTTP_UTIL_H_
