#pragma once

#include <cstddef>
#include <functional>

namespace rrforge {

/// Worker count: hardware concurrency, capped by the RRFORGE_THREADS
/// environment variable when it holds a positive integer.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Items are
/// handed out dynamically; the first exception thrown is rethrown after
/// every worker has stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rrforge
