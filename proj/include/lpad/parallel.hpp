#pragma once

#include <cstddef>
#include <functional>

namespace lpad {

/// Worker count: LPAD_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, count). Each index runs exactly once; calls made
/// from inside a worker run serially on that worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace lpad
