#pragma once

#include <Eigen/Dense>

#include <functional>

namespace mudest {

/// Worker cap: MUD_EST_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
int max_threads();

/// Runs fn(begin, end) over contiguous chunks of [0, n), possibly on
/// multiple threads. Chunks are disjoint, so writes to per-index slots are
/// race-free and results do not depend on the thread count.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& fn);

}  // namespace mudest
