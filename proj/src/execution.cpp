#include "ringlock/execution.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ringlock {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int workers) { g_workers.store(workers < 0 ? 0 : workers); }

int worker_count() { return g_workers.load(); }

int resolved_threads() {
  const int w = worker_count();
  if (w > 0) return w;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ringlock
