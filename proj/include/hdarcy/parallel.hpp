#pragma once

#include <algorithm>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace hdarcy {

/// Runs body(i) for i in [0, n) on up to `threads` threads with a static
/// contiguous partition. Every index is written by exactly one thread, so
/// results stored per index are independent of the thread count. If bodies
/// throw, the exception of the lowest failing index is rethrown.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
  if (n <= 0) return;
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<int> failed_at(workers, std::numeric_limits<int>::max());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, w, begin, end] {
      for (int i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          failed_at[w] = i;
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  const auto first = std::min_element(failed_at.begin(), failed_at.end());
  if (*first != std::numeric_limits<int>::max()) {
    std::rethrow_exception(errors[first - failed_at.begin()]);
  }
}

}  // namespace hdarcy
