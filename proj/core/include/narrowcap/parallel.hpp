#pragma once

#include <cstddef>
#include <functional>

namespace narrowcap {

/// Worker count for a request: 0 means hardware concurrency. The result is
/// capped by the NARROWCAP_THREADS environment variable when it is set to a
/// positive integer, and is always at least 1.
unsigned resolve_threads(unsigned requested);

/// Calls body(i) for i in [0, n) on up to `threads` workers (resolved as
/// above). Work is handed out in small contiguous chunks. The first exception
/// thrown by a body is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace narrowcap
