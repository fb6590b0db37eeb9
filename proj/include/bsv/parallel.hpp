#pragma once

#include <cstddef>
#include <functional>

namespace bsv {

/// Worker cap used by the engines; 0 means hardware concurrency.
void set_worker_count(int jobs);
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
/// handled by exactly one call, so writes to per-index slots need no locking.
/// The first exception thrown by any call is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bsv
