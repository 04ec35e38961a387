#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace driftrt {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n) over `threads` workers with a static contiguous
/// partition. Workers must write only to disjoint slots; combined with an
/// index-ordered reduction afterwards this keeps results bit-identical for
/// any thread count. The first exception thrown by a worker is rethrown.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = resolve_threads(threads);
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  if (threads > n) threads = n;

  std::vector<std::thread> workers;
  workers.reserve(threads);
  std::vector<std::exception_ptr> errors(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    workers.emplace_back([&, t, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace driftrt
