#pragma once

#include <cstddef>
#include <functional>

namespace qgl {

// Worker count from an explicit request, else QGL_WORKERS, else hardware concurrency.
int resolve_workers(int requested);

// Runs body(i) for i in [0, n) on up to `workers` threads. Results must be written
// to per-index slots by the caller so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace qgl
