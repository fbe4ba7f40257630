#ifndef PSJNET_PARALLEL_HPP_
#define PSJNET_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace psjnet {

// Worker cap: PSJNET_THREADS if set to a positive integer, else the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for i in [0, n) on up to `threads` workers. Items are split
// into contiguous chunks, so the assignment depends only on n and threads.
// The first exception raised by any call is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace psjnet

#endif  // PSJNET_PARALLEL_HPP_
