#pragma once

#include <cstddef>
#include <functional>

namespace edgegs {

// Worker count: EDGEGS_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int thread_count();

// Runs fn(task) for task in [0, tasks) on up to thread_count() threads.
// Tasks must write to disjoint state; callers that reduce results do so
// afterwards in task order, so output never depends on the thread count.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& fn);

} // namespace edgegs
