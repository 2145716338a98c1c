#pragma once

#include <cstddef>
#include <functional>

namespace hopf {

// Worker count: HOPFGEOM_THREADS if set, else hardware concurrency.
unsigned thread_count();

// Runs body(i) for i in [0, n) over a dynamic chunked schedule. Each index is
// visited exactly once; callers write results into per-index slots and reduce
// afterwards in index order, so results do not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hopf
