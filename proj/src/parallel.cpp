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

#include "shapval/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace shapval {
namespace {

std::atomic<std::size_t> g_thread_override{0};

std::size_t DefaultThreads() {
  if (const char* env = std::getenv("SHAPVAL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      // Ignore garbage and fall through.
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace

std::size_t MaxThreads() {
  const std::size_t o = g_thread_override.load();
  return o != 0 ? o : DefaultThreads();
}

void SetMaxThreads(std::size_t n) { g_thread_override.store(n); }

ScopedThreadCount::ScopedThreadCount(std::size_t n)
    : previous_(g_thread_override.load()) {
  SetMaxThreads(n);
}

ScopedThreadCount::~ScopedThreadCount() { SetMaxThreads(previous_); }

void ParallelForChunks(std::size_t n_chunks,
                       const std::function<void(std::size_t)>& body) {
  if (n_chunks == 0) return;
  const std::size_t n_threads = std::min(MaxThreads(), n_chunks);
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        body(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n_chunks);
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n_threads - 1);
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace shapval
