#pragma once

// Thin dispatch layer over OpenMP. Every kernel that uses parallel_for writes
// into a pre-sized output slot per index, so results never depend on the
// schedule.

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ddnet {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

template <typename F>
void parallel_for(std::ptrdiff_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
#endif
}

template <typename F>
void serial_for(std::ptrdiff_t n, F&& f) {
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
}

enum class Exec { Serial, Parallel };

template <typename F>
void run_for(Exec exec, std::ptrdiff_t n, F&& f) {
  if (exec == Exec::Parallel)
    parallel_for(n, std::forward<F>(f));
  else
    serial_for(n, std::forward<F>(f));
}

}  // namespace ddnet
