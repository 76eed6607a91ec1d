#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ovsr {

namespace detail {

inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> count{1};
  return count;
}

inline thread_local bool in_parallel_region = false;

}  // namespace detail

// Number of worker threads used by parallel_for. Results never depend on it:
// every parallel loop writes disjoint outputs and reductions run serially in
// index order afterwards.
inline int num_threads() { return detail::thread_count_slot().load(); }

inline void set_num_threads(int n) {
  detail::thread_count_slot().store(std::max(1, n));
}

// Runs fn(i) for i in [0, n). Nested calls run serially on the calling worker.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n);
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    detail::in_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    detail::in_parallel_region = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// RAII override of the worker count.
class ThreadCountScope {
 public:
  explicit ThreadCountScope(int n) : saved_(num_threads()) { set_num_threads(n); }
  ~ThreadCountScope() { set_num_threads(saved_); }
  ThreadCountScope(const ThreadCountScope&) = delete;
  ThreadCountScope& operator=(const ThreadCountScope&) = delete;

 private:
  int saved_;
};

}  // namespace ovsr
