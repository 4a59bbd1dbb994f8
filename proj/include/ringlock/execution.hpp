#pragma once

#include <cstddef>
#include <exception>

namespace ringlock {

/// Selects the OpenMP kernel or the serial reference loop. Both paths produce
/// bit-identical results; the serial one is kept for tests and benchmarks.
enum class Execution { serial, parallel };

/// Worker count used by Execution::parallel kernels. 0 means the OpenMP default.
void set_worker_count(int workers);
int worker_count();
/// Thread count an OpenMP region will actually request.
int resolved_threads();

/// Calls fn(i) for i in [0, n). Each index must write only its own output slot.
/// Exceptions from worker threads are rethrown on the caller (first one wins).
template <class Fn>
void for_each_index(Execution exec, std::ptrdiff_t n, Fn&& fn) {
  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  const int threads = resolved_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(ringlock_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ringlock
