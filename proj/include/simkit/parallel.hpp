#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "simkit/errors.hpp"

namespace simkit {

/// Execution options for the chunk-parallel stages. worker_count = 1 runs
/// inline on the calling thread; results never depend on the value.
struct ParallelOptions {
  int worker_count = 1;
};

namespace detail {

/// Runs independent tasks on a bounded pool. Tasks share no mutable state;
/// failures are collected and the lowest-indexed one is rethrown after all
/// workers finish, so failure reporting does not depend on scheduling.
inline void run_tasks(int worker_count, const std::vector<std::function<void()>>& tasks) {
  if (worker_count < 1) throw ContractError("worker_count must be >= 1");
  std::vector<std::exception_ptr> failures(tasks.size());
  if (worker_count == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      try {
        tasks[i]();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          tasks[i]();
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    std::size_t n = std::min<std::size_t>(worker_count, tasks.size());
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace detail
}  // namespace simkit
