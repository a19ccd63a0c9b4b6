// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace tppi {
namespace detail {

inline std::size_t threads_from_env() {
  if (const char* env = std::getenv("TPPI_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

inline std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> n{threads_from_env()};
  return n;
}

inline thread_local bool in_parallel_region = false;

}  // namespace detail

/// Caps the worker count used by every kernel. Results never depend on it.
inline void set_num_threads(std::size_t n) { detail::thread_setting() = std::max<std::size_t>(1, n); }

inline std::size_t num_threads() { return detail::thread_setting(); }

/// Runs fn(i) for i in [begin, end) over contiguous chunks. Nested calls run
/// serially on the calling worker.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  const std::size_t workers =
      detail::in_parallel_region ? 1 : std::min(num_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  auto run_chunk = [&](std::size_t w) {
    const bool saved = detail::in_parallel_region;
    detail::in_parallel_region = true;
    try {
      const std::size_t lo = begin + w * chunk;
      const std::size_t hi = std::min(end, lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
    detail::in_parallel_region = saved;
  };
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
  run_chunk(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tppi
