#pragma once

// Ordered parallel map/reduce. Tasks run on a small pool; results are
// reduced strictly in task-index order so the outcome matches a sequential
// run regardless of scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rwre/core.hpp"

namespace rwre {

class TaskFailure : public Error {
 public:
  TaskFailure(std::size_t task_id, const std::string& what)
      : Error("task " + std::to_string(task_id) + " failed: " + what) {
    attribute_task(task_id);
  }
};

/// Number of worker threads used by run_parallel (0 = hardware concurrency).
inline std::size_t& parallel_threads() {
  static std::size_t n = 0;
  return n;
}

/// Evaluates task(i) for i in [0, n_tasks) and folds the results into `init`
/// with reduce(acc, result) in index order. A failing task is rethrown as a
/// TaskFailure; rwre::Error subclasses keep their type and get the task index
/// attached, so callers can still dispatch on them.
template <class Result, class Task, class Reduce>
Result run_parallel(std::size_t n_tasks, Task&& task, Reduce&& reduce, Result init = Result{}) {
  std::vector<std::optional<decltype(task(std::size_t{}))>> results(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);

  std::size_t workers = parallel_threads();
  if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n_tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
      try {
        results[i].emplace(task(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < n_tasks; ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (Error& e) {
        e.attribute_task(i);
        throw;
      } catch (const std::exception& e) {
        throw TaskFailure(i, e.what());
      }
    }
    init = reduce(std::move(init), std::move(*results[i]));
  }
  return init;
}

}  // namespace rwre
