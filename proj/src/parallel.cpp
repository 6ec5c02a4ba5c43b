#include "specband/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace specband {

namespace {
int g_threads = 1;
}

void set_thread_count(int threads) {
  g_threads = threads < 1 ? 1 : threads;
}

int thread_count() { return g_threads; }

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  int workers = g_threads;
  if (workers <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (static_cast<size_t>(workers) > n) workers = static_cast<int>(n);
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace specband
