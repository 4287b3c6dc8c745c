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

#ifndef SHAPVAL_PARALLEL_HPP_
#define SHAPVAL_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace shapval {

// Maximum number of worker threads. Defaults to the SHAPVAL_THREADS
// environment variable when set, otherwise hardware concurrency.
std::size_t MaxThreads();

// Overrides MaxThreads() for the whole process; 0 restores the default.
void SetMaxThreads(std::size_t n);

// Restores the previous thread cap on destruction.
class ScopedThreadCount {
 public:
  explicit ScopedThreadCount(std::size_t n);
  ~ScopedThreadCount();
  ScopedThreadCount(const ScopedThreadCount&) = delete;
  ScopedThreadCount& operator=(const ScopedThreadCount&) = delete;

 private:
  std::size_t previous_;
};

// Runs body(chunk) for chunk in [0, n_chunks). Chunks are claimed
// dynamically, so callers must write per-chunk results to their own slot and
// reduce them in chunk order afterwards. The first exception thrown by any
// chunk is rethrown on the calling thread.
void ParallelForChunks(std::size_t n_chunks,
                       const std::function<void(std::size_t)>& body);

// Number of fixed-size chunks covering n items.
constexpr std::size_t ChunkCount(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace shapval

#endif  // SHAPVAL_PARALLEL_HPP_
