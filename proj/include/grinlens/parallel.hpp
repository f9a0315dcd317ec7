#pragma once

// Minimal fork-join loop. Each index writes only its own result slot, so the
// outcome does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace grinlens {

/// Worker count used when a caller passes 0. Defaults to the hardware
/// concurrency; set_default_workers overrides it process-wide.
int default_workers();
void set_default_workers(int n);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception of the
/// lowest failing index is rethrown after all threads join.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 0) workers = default_workers();
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_index = n;
  std::exception_ptr failure;
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace grinlens
