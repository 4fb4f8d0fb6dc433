// Copyright 2026 The fdkd Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef FDKD_COMMON_PARALLEL_H_
#define FDKD_COMMON_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fdkd {

// Runs fn(i) for i in [0, n) on at most `max_workers` threads. Callers write
// results into index-addressed slots, so output order never depends on
// scheduling. If any call throws, the exception of the lowest index is
// rethrown after all workers finish.
template <typename Fn>
void ParallelFor(size_t n, size_t max_workers, Fn&& fn) {
  if (n == 0) return;
  const size_t workers = std::max<size_t>(1, std::min(max_workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace fdkd

#endif  // FDKD_COMMON_PARALLEL_H_
