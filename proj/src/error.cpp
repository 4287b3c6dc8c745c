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

#include "shapval/error.hpp"

namespace shapval {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return "argument";
    case ErrorKind::kSizeGuard: return "size-guard";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kUnknownMethod: return "unknown-method";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace shapval
