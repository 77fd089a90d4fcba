#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rwrs {

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Run fn(i) for i in [0, count). Work is handed out in chunks through an
// atomic cursor; every result must be written to a slot indexed by i, so the
// outcome is independent of which thread processed which chunk.
template <class F>
void parallel_for(std::int64_t count, int threads, F&& fn, std::int64_t grain = 1) {
  threads = resolve_thread_count(threads);
  if (threads <= 1 || count <= grain) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::int64_t> cursor{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      std::int64_t begin = cursor.fetch_add(grain, std::memory_order_relaxed);
      if (begin >= count) break;
      std::int64_t end = std::min(begin + grain, count);
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = std::current_exception();
        break;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads) - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (failed.load()) std::rethrow_exception(first_error);
}

}  // namespace rwrs
