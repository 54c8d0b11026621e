#pragma once

#include <cstddef>
#include <functional>

namespace pedirl {

/// Global cap on worker threads (0 = hardware concurrency). Set once from the
/// CLI --threads flag before heavy work starts.
void set_max_threads(int n);
int effective_threads();

/// Runs fn(i) for i in [0, n). Work is split across worker threads; fn must
/// only write to per-index slots so results are independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pedirl
