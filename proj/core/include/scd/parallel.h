// scd/parallel.h
//
// Index-parallel loop over a fixed worker pool. Callers write results into
// pre-sized slots so output order never depends on scheduling.

#ifndef SCD_PARALLEL_H_
#define SCD_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace scd {

/// Runs fn(0) .. fn(n - 1) on up to `jobs` threads (jobs <= 1 runs inline).
/// If any call throws, the exception of the lowest failing index is
/// rethrown after all workers stop.
void ParallelFor(std::size_t n, int jobs,
                 const std::function<void(std::size_t)> &fn);

}  // namespace scd

#endif  // SCD_PARALLEL_H_
