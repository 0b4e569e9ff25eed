#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace tubelab {

/// Worker count: TUBELAB_THREADS when set (>= 1), else hardware_concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("TUBELAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [0, count). Work is handed out through a shared atomic
/// counter in chunks; fn must be safe to call concurrently.
template <typename Fn>
void parallel_for(std::int64_t count, Fn&& fn, int threads = 0) {
  if (threads <= 0) threads = worker_count();
  if (threads == 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::int64_t chunk = std::max<std::int64_t>(1, count / (8 * threads));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::int64_t lo = next.fetch_add(chunk);
      if (lo >= count) return;
      const std::int64_t hi = std::min(count, lo + chunk);
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace tubelab
