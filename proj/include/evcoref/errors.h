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

#ifndef EVCOREF_ERRORS_H_
#define EVCOREF_ERRORS_H_

#include <stdexcept>
#include <string>

namespace evcoref {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record or file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A data invariant does not hold (duplicate ids, spans out of bounds, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Array shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An external embedding or generation service failed.
class ServiceError : public Error {
 public:
  using Error::Error;
};

// A non-finite value showed up in a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace evcoref

#endif  // EVCOREF_ERRORS_H_
