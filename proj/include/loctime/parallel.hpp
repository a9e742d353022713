#pragma once

// Deterministic block parallelism: work is split into fixed blocks whose
// results land in fixed slots, so outputs do not depend on the worker count.

#include <cstddef>
#include <functional>
#include <span>

namespace loctime {

/// Worker count: hardware concurrency, capped by LOCTIME_THREADS if set.
unsigned worker_count();

/// Calls body(block) for block in [0, blocks) on up to worker_count() threads.
/// The first exception thrown by any block is rethrown.
void parallel_for(std::size_t blocks, const std::function<void(std::size_t)>& body);

/// Pairwise (cascade) summation in fixed order.
double pairwise_sum(std::span<const double> values);

}  // namespace loctime
