#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "hsicrf/types.hpp"

namespace hsicrf {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(task) for every task in [0, tasks). Each task is executed by
// exactly one thread, so results are bit-identical for any worker count as
// long as fn itself is deterministic per task.
template <typename Fn>
void parallel_for(Index tasks, int workers, Fn&& fn) {
  workers = std::min<Index>(resolve_workers(workers), tasks);
  if (workers <= 1) {
    for (Index t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      // Static strided assignment, no work stealing.
      for (Index t = w; t < tasks; t += workers) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hsicrf
