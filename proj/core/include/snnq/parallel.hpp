#pragma once

#include <cstddef>
#include <functional>

namespace snnq {

/// Runs fn(i) for every i in [0, n), block-partitioned over at most `threads`
/// workers. Iterations must not depend on each other; the first exception
/// thrown by any worker is rethrown on the caller's thread.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace snnq
