#pragma once

#include <cstddef>
#include <functional>

namespace ttlab {

/// Worker count: `requested` if positive, else TTLAB_WORKERS, else the
/// hardware concurrency. Always at least 1.
int worker_count(int requested = 0);

/// Calls body(i) for i in [0, n) on up to `workers` threads. Iterations are
/// handed out dynamically; the first exception thrown is rethrown after all
/// workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = 0);

}  // namespace ttlab
