#pragma once

#include <cstddef>
#include <functional>

namespace mlwave {

/// Worker cap; initialized from MLWAVE_THREADS (default 1), overridable.
int thread_count();
void set_thread_count(int n);

/// Calls body(i) for i in [0, n) on up to thread_count() threads using
/// contiguous blocks. Results must not depend on the split; every body writes
/// only its own outputs. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mlwave
