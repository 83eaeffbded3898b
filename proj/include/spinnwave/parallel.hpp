#pragma once

#include <cstddef>
#include <functional>

namespace spinnwave {

/// Worker count: SPINNWAVE_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

/// Runs task(i) for i in [0, n_tasks) on up to worker_count() threads.
/// Tasks must write to disjoint state; callers reduce results in index order
/// so that output does not depend on the thread count.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task);

}  // namespace spinnwave
