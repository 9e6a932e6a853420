#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace clustergas {

inline int default_worker_count() {
  if (const char* env = std::getenv("CLUSTER_GAS_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(job) for job in [0, n_jobs) on a worker pool. Each job owns its slot
// of the result storage, so the outcome is independent of scheduling; the
// first exception is rethrown after all workers join.
inline void parallel_for_jobs(std::size_t n_jobs, int workers,
                              const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n_jobs <= 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) fn(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= n_jobs) return;
      try {
        fn(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<std::size_t>(workers, n_jobs);
  pool.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Deterministic pairwise-tree reduction over per-job slots: reduce(lo,hi)
// merges reduce(lo,mid) and reduce(mid,hi), independent of the worker count.
template <typename T, typename Merge>
T tree_reduce(std::vector<T>& slots, std::size_t lo, std::size_t hi, Merge&& merge) {
  if (hi - lo == 1) return std::move(slots[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  T left = tree_reduce(slots, lo, mid, merge);
  T right = tree_reduce(slots, mid, hi, merge);
  merge(left, right);
  return left;
}

template <typename T, typename Merge>
T tree_reduce(std::vector<T>& slots, Merge&& merge) {
  return tree_reduce(slots, 0, slots.size(), merge);
}

}  // namespace clustergas
