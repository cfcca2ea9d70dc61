#pragma once

#include <cstddef>
#include <functional>

namespace mixfree {

/// Worker count: MIXFREE_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Results
/// must be written to per-index slots; the call returns once every index has
/// completed. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace mixfree
