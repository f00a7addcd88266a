#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mtdiff {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is split into
// contiguous blocks; callers must write results into per-index slots so the
// outcome is independent of scheduling. Exceptions from workers are
// rethrown on the calling thread (first one wins).
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  const std::size_t nthreads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nthreads);
  const std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, t, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace mtdiff
