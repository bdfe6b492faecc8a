#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace specdyn {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must be
/// independent and address their own output slots by index, so the result
/// is invariant under the parallelism degree. The first exception thrown by
/// any item is rethrown after all threads join.
inline void parallel_for(long n, int jobs, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<long>(std::max(jobs, 1), n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

/// Parallelism default: explicit argument, else SPECDYN_JOBS, else
/// hardware concurrency.
int default_jobs(int requested = 0);

}  // namespace specdyn
