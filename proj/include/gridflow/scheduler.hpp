#pragma once

// Execution substrate for the two parallel patterns used throughout the
// library:
//
//   nodal  - every index is an independent task that writes only its own
//            output slot (row assembly, mismatch, branch flows, ...);
//   levels - tasks grouped into level sets; a barrier separates consecutive
//            levels, so a task may read anything produced by an earlier
//            level (factorization and triangular solves).
//
// All other modules are written against these two calls and contain no
// threading code of their own.

#include <omp.h>

#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace gridflow {

/// Environment variable consulted for the default worker count.
inline constexpr const char* kThreadsEnvVar = "GRIDFLOW_THREADS";

/// Worker count from GRIDFLOW_THREADS, else the OpenMP default.
int default_workers();

enum class Direction { Forward, Backward };

struct LevelSchedule {
  std::span<const std::vector<int>> levels;
  Direction direction = Direction::Forward;
};

struct LevelTiming {
  std::size_t level = 0;  // position in execution order
  std::size_t width = 0;
  bool inlined = false;
  double ms = 0.0;
};

class Scheduler {
 public:
  static constexpr std::size_t kDefaultInlineCutoff = 16;

  explicit Scheduler(int workers = default_workers(),
                     std::size_t inline_cutoff = kDefaultInlineCutoff);

  int workers() const noexcept { return workers_; }
  std::size_t inline_cutoff() const noexcept { return inline_cutoff_; }

  /// Called once per executed level with its wall time. Unset by default.
  void set_level_hook(std::function<void(const LevelTiming&)> hook) {
    level_hook_ = std::move(hook);
  }

  /// Runs body(i) for i in [0, count). If tasks throw, the exception of the
  /// lowest failing index is rethrown after all tasks have finished.
  template <typename Body>
  void run_nodal(std::size_t count, Body&& body) const {
    if (workers_ <= 1 || count < inline_cutoff_ || count < 2) {
      for (std::size_t i = 0; i < count; ++i) body(i);
      return;
    }
    run_parallel(count, [&](std::size_t t) { body(t); });
  }

  /// Runs body(node) for every node of every level. Levels execute in
  /// schedule order (reversed for Direction::Backward) with a full barrier
  /// between them; execution stops after the first level containing a
  /// failure, whose lowest-index exception is rethrown.
  template <typename Body>
  void run_levels(const LevelSchedule& schedule, Body&& body) const {
    const std::size_t count = schedule.levels.size();
    for (std::size_t step = 0; step < count; ++step) {
      const std::size_t pos =
          schedule.direction == Direction::Forward ? step : count - 1 - step;
      const std::vector<int>& nodes = schedule.levels[pos];
      const bool inlined = workers_ <= 1 || nodes.size() < inline_cutoff_;
      const auto start = std::chrono::steady_clock::now();
      if (inlined) {
        for (int node : nodes) body(node);
      } else {
        run_parallel(nodes.size(), [&](std::size_t t) { body(nodes[t]); });
      }
      if (level_hook_) {
        const std::chrono::duration<double, std::milli> elapsed =
            std::chrono::steady_clock::now() - start;
        level_hook_(LevelTiming{step, nodes.size(), inlined, elapsed.count()});
      }
    }
  }

 private:
  template <typename Task>
  void run_parallel(std::size_t count, Task&& task) const {
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t failed = kNone;
    std::exception_ptr error;
    const auto n = static_cast<long long>(count);
#pragma omp parallel for num_threads(workers_) schedule(static)
    for (long long t = 0; t < n; ++t) {
      try {
        task(static_cast<std::size_t>(t));
      } catch (...) {
#pragma omp critical(gridflow_scheduler_error)
        {
          if (static_cast<std::size_t>(t) < failed) {
            failed = static_cast<std::size_t>(t);
            error = std::current_exception();
          }
        }
      }
    }
    if (error) std::rethrow_exception(error);
  }

  int workers_;
  std::size_t inline_cutoff_;
  std::function<void(const LevelTiming&)> level_hook_;
};

}  // namespace gridflow
