// parallel.hpp — index-parallel loop over grid points. Thread count is capped
// by the FLUXSIM_THREADS environment variable (default: hardware concurrency).

#pragma once

#include <cstddef>
#include <functional>

namespace fluxsim {

// Effective worker count for `n` independent tasks.
std::size_t worker_count(std::size_t n);

// Calls fn(i) for i in [0, n), partitioned across workers. fn must be safe to
// call concurrently for distinct i. The first exception thrown is rethrown on
// the calling thread after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fluxsim
