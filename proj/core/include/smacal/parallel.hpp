#pragma once

#include <cstddef>
#include <functional>

namespace smacal {

/// Runs body(i) for i in [0, n) on up to `jobs` threads (0 = hardware
/// concurrency). Work is split into contiguous index blocks; results must be
/// written to per-index slots, which keeps output independent of `jobs`.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace smacal
