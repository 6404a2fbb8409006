#include "core/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace htlab {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_chunks(std::size_t n_items, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& work) {
  if (n_items == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
  const int n_threads = std::min<std::size_t>(resolve_threads(threads), n_chunks);

  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      work(c, c * chunk_size, std::min(n_items, (c + 1) * chunk_size));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto runner = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        work(c, c * chunk_size, std::min(n_items, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(runner);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace htlab
