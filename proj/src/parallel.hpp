#pragma once

#include <cstddef>
#include <functional>

namespace threehalves {

// Worker count: THREE_HALVES_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Indices are
// handed out in contiguous blocks, and callers write results into per-index
// slots, so reductions done afterwards are independent of the thread count.
// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace threehalves
