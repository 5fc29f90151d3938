#pragma once

#include <cstddef>
#include <functional>

namespace polarwave {

// Worker count: POLARWAVE_THREADS if set and positive, else hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n). Each index is processed exactly once; results must
// be written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace polarwave
