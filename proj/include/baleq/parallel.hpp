#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace baleq {

// Worker cap: BALEQ_THREADS if set, else the machine's hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("BALEQ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Run fn(i) for i in [0, n). fn must write only to per-index slots, so the
// outcome is identical for any worker count. Nested calls run serially on the
// caller's thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  static thread_local bool inside = false;
  unsigned workers = worker_count();
  if (workers > n) workers = static_cast<unsigned>(n);
  if (inside || workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      inside = true;
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
      inside = false;
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace baleq
