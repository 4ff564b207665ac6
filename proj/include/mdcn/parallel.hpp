#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace mdcn {

/// Worker cap: MDCN_THREADS when set (clamped to at least 1), otherwise the
/// hardware concurrency.
inline int64_t max_threads() {
  if (const char* env = std::getenv("MDCN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    return v >= 1 ? static_cast<int64_t>(v) : 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw >= 1 ? static_cast<int64_t>(hw) : 1;
}

/// Runs fn(0..n-1) across up to max_threads() workers. Each index is claimed
/// exactly once; callers get deterministic results by writing to index-owned
/// slots. The first exception thrown by any worker is rethrown after join.
inline void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  if (n <= 0) return;
  const int64_t workers = std::min<int64_t>(max_threads(), n);
  if (workers <= 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int64_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const int64_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          bool expected = false;
          if (failed.compare_exchange_strong(expected, true)) {
            error = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mdcn
