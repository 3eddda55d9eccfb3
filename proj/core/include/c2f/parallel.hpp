#pragma once

#include <functional>

namespace c2f {

// Worker count: min(hardware_concurrency, C2F_THREADS) when the env var is set.
int max_threads();

// Runs fn(i) for i in [0, count) on up to max_threads() workers. Work items
// must be independent; callers keep determinism by writing results by index.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace c2f
