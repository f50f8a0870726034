#include "gridflow/scheduler.hpp"

#include <cstdlib>
#include <string>

namespace gridflow {

int default_workers() {
  if (const char* env = std::getenv(kThreadsEnvVar)) {
    try {
      const int value = std::stoi(env);
      if (value >= 1) return value;
    } catch (const std::exception&) {
      // unparsable value: fall through to the OpenMP default
    }
  }
  return omp_get_max_threads();
}

Scheduler::Scheduler(int workers, std::size_t inline_cutoff)
    : workers_(workers < 1 ? 1 : workers), inline_cutoff_(inline_cutoff) {}

}  // namespace gridflow
