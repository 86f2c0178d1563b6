#pragma once

#include <cstddef>
#include <functional>

namespace opnorm {

/// OPNORM_THREADS if set to a positive integer, else the number of logical CPUs.
std::size_t worker_count();

/// Runs fn(0) .. fn(n-1) on up to worker_count() threads. Each index is
/// handled exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception thrown by any
/// task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace opnorm
