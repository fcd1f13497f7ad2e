#pragma once

#include <cstddef>
#include <functional>

namespace rrdps {

// Worker count: hardware concurrency, capped by the QKD_THREADS environment
// variable when it holds a positive integer.
unsigned worker_count();

// Calls body(begin, end, worker) over a partition of [0, count) into
// contiguous chunks, one per worker. Blocks until all chunks finish and
// rethrows the first exception raised by any worker.
void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t, unsigned)>& body);

// Same with an explicit worker count (at least 1), ignoring the environment.
void parallel_chunks(std::size_t count, unsigned workers,
                     const std::function<void(std::size_t, std::size_t, unsigned)>& body);

}  // namespace rrdps
