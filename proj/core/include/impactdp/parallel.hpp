#pragma once

#include <cstddef>
#include <functional>

namespace impactdp {

/// Worker count: `requested` when positive, otherwise IMPACTDP_THREADS when
/// set to a positive integer, otherwise the hardware concurrency (at least 1).
int resolve_thread_count(int requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results to per-index slots so the
/// output does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace impactdp
