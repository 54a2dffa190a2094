#pragma once

#include <cstddef>
#include <functional>

namespace lensless {

// Worker count used when a caller passes workers <= 0.
int default_workers();

// Splits [0, n) into contiguous chunks, one per worker. Each index is visited exactly once,
// so callers that write disjoint slots get results independent of the worker count.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace lensless
