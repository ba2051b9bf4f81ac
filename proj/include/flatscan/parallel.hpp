#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace flatscan {

// Worker count used by parallel_for; 1 runs inline.
void set_thread_count(int n);
int thread_count();

// Calls fn(i) for i in [0, count). Each index is written by exactly one worker, so results
// stored per index do not depend on the thread count.
template <class Fn>
void parallel_for(int count, Fn&& fn) {
  const int workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace flatscan
