#pragma once

#include <cstddef>

namespace magtopt {

/// Selects the serial reference loop or the OpenMP loop for a kernel.
enum class ExecPolicy { Serial, Parallel };

/// Number of OpenMP threads used by parallel kernels (1 without OpenMP).
int worker_count();
void set_worker_count(int n);

template <class F>
void for_each_index(ExecPolicy policy, std::ptrdiff_t n, F&& f) {
  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  }
}

template <class F>
void for_each_index_dynamic(ExecPolicy policy, std::ptrdiff_t n, F&& f) {
  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  }
}

}  // namespace magtopt
