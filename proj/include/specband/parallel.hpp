#pragma once

#include <cstddef>
#include <functional>

namespace specband {

// Global worker count used by parallel_for. 1 = serial. Set once from the
// CLI --threads flag before running a pipeline.
void set_thread_count(int threads);
int thread_count();

// Runs fn(i) for i in [0, n). Each index is processed exactly once and
// results must be written to index-owned slots, so output is identical
// for any worker count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace specband
