#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smartboost {

// Static-schedule parallel loop. Callers only use it for bodies whose writes
// are disjoint per index, so results never depend on the thread count.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
#ifdef _OPENMP
  if (threads > 1 && n > 1) {
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)threads;
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace smartboost
