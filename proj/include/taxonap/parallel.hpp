#pragma once

#include <cstddef>
#include <functional>

namespace taxonap {

// Process-wide worker count used when a call passes 0; 0 here means
// std::thread::hardware_concurrency().
void set_default_threads(std::size_t threads);
std::size_t resolve_threads(std::size_t requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Indices are handed
// out dynamically; the first exception thrown by any call is rethrown after
// all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace taxonap
