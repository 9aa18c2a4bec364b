#pragma once

#include <functional>

namespace mosaikit {

// Number of worker threads: MOSAIKIT_THREADS when set (values < 1 mean
// serial), hardware concurrency otherwise.
int worker_count();

// Runs fn(i) for i in [begin, end) across worker threads with a static
// partition. Callers must make writes disjoint per index, which keeps results
// independent of the schedule.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace mosaikit
