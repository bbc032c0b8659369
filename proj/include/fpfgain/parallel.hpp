#pragma once

#include <cstddef>
#include <functional>

namespace fpfgain {

/// Runs task(i) for i in [0, count) on up to `threads` workers.
///
/// Tasks must write only to their own output slot; ordering of side effects is
/// unspecified, so callers reduce results by index afterwards. The first
/// exception thrown by any task is rethrown after all workers have joined.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

} // namespace fpfgain
