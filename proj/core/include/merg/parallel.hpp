#pragma once

#include <cstddef>
#include <functional>

namespace merg {

// Worker count: hardware concurrency capped by the MERG_THREADS environment
// variable (values < 1 mean single-threaded).
int worker_count();

// Runs fn(i) for i in [begin, end) across workers. Blocks until done.
// Results must be written to pre-sized storage indexed by i so that the
// outcome does not depend on scheduling.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

}  // namespace merg
