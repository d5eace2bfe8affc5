#pragma once

#include <cstddef>
#include <functional>

namespace robust_mdp {

/// Worker count: ROBUSTMDP_THREADS if set to a positive integer, else the hardware concurrency.
[[nodiscard]] std::size_t thread_count();

/**
 * Calls body(i) for i in [0, n) on up to thread_count() threads.
 *
 * Indices are split into contiguous blocks; callers write results into
 * per-index slots so the outcome does not depend on scheduling. The first
 * exception thrown by any body is rethrown after all workers join. Calls made
 * from inside a worker run serially on that worker.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace robust_mdp
