// Copyright 2026 The shapval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPVAL_ERROR_HPP_
#define SHAPVAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace shapval {

// Error classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kArgument = 1,   // invalid parameter or precondition violation
  kSizeGuard,      // exponential enumeration limit exceeded
  kRange,          // utility value outside the declared [0, r]
  kNumerical,      // singular system, non-convergence
  kConfig,         // malformed configuration or flags
  kUnknownMethod,  // unrecognised method tag
  kIo,             // unreadable or unwritable file
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what)
      : Error(ErrorKind::kArgument, what) {}
};

class SizeGuardError : public Error {
 public:
  explicit SizeGuardError(const std::string& what)
      : Error(ErrorKind::kSizeGuard, what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what)
      : Error(ErrorKind::kRange, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

class UnknownMethodError : public Error {
 public:
  explicit UnknownMethodError(const std::string& what)
      : Error(ErrorKind::kUnknownMethod, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(ErrorKind::kIo, what) {}
};

}  // namespace shapval

#endif  // SHAPVAL_ERROR_HPP_
