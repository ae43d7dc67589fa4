#pragma once

// Replicate-parallel execution. Tasks are indexed 0..n-1, results land in
// slot i regardless of which worker ran them, so outputs never depend on the
// worker count or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rcmlab {

/// 0 means "available parallelism".
unsigned effective_workers(unsigned requested) noexcept;

/// Runs f(i, worker) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads have joined.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  const auto w = static_cast<unsigned>(
      std::min<std::size_t>(std::max(1u, effective_workers(workers)), std::max<std::size_t>(n, 1)));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i, 0u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&](unsigned worker) {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n || failed.load(std::memory_order_relaxed)) return;
      try {
        f(i, worker);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  for (unsigned t = 1; t < w; ++t) pool.emplace_back(run, t);
  run(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// results[i] = f(i, worker).
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned workers, F&& f) {
  std::vector<T> out(n);
  parallel_for(n, workers, [&](std::size_t i, unsigned worker) { out[i] = f(i, worker); });
  return out;
}

}  // namespace rcmlab
