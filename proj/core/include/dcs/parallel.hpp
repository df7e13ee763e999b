#pragma once

#include <cstddef>
#include <functional>

namespace dcs {

// Worker count used by parallel_for. Defaults to the DCS_THREADS
// environment variable, falling back to hardware concurrency.
int num_threads();
void set_num_threads(int threads);

// Runs fn(i) for i in [0, count). Work is split into contiguous static
// chunks, one chunk per worker; each index is executed by exactly one
// worker, so results are bitwise identical for any thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace dcs
