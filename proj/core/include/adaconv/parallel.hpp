#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace adaconv {

// Runs fn(i) for i in [0, count). Work is split into contiguous chunks, one per
// thread. Callers are responsible for making iterations independent; all
// cross-iteration reductions in this codebase are performed afterwards in index
// order so results do not depend on the thread count.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int lo = t * chunk;
    int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace adaconv
