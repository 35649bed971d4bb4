#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace modalcur {

// Worker count: `requested` if positive, else hardware concurrency; both
// capped by MODALCUR_THREADS when that is set to a positive integer.
int worker_threads(int requested = 0);

// Runs fn(i) for i in [0, n) on up to `threads` threads. Work items must be
// independent; the first exception is rethrown after all threads join.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int t_count = threads < n ? threads : n;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t_count));
  for (int t = 0; t < t_count; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += t_count) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace modalcur
