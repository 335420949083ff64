#pragma once

#include <cstddef>
#include <functional>

namespace dwd {

/// Worker count: DWD_NUM_THREADS if set to a positive integer, else the hardware concurrency.
[[nodiscard]] std::size_t thread_count();

/// Runs task(i) for every i in [0, count) across up to thread_count() threads.
/// Tasks must write only to their own output slot. The first exception thrown
/// by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace dwd
