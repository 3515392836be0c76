#pragma once

#include <cstddef>
#include <functional>

namespace cardiokey {

/// Runs fn(i) for i in [0, count) on at most `threads` workers. Each index
/// runs exactly once; the exception of the lowest failing index is
/// rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace cardiokey
