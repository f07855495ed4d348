#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace potflow {

struct ParallelOptions {
  int threads = 0;            // 0: POTFLOW_THREADS, else hardware concurrency
  bool deterministic = true;  // fixed chunking and ordered reductions
};

/// Worker count for a request of `requested` (0 means automatic).
int resolve_threads(int requested);

/// Calls body(chunk, begin, end) for every chunk of [0, n) split into pieces
/// of `chunk_size`. Chunks are claimed dynamically by up to `threads`
/// workers; the first exception thrown by any worker is rethrown.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunk_size, int threads, Body&& body) {
  const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
  if (chunks == 0) return;
  const int workers = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), chunks));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c)
      body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace potflow
