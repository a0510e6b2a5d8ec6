#pragma once

#include <functional>

namespace resnmpc {

// Worker cap from RESIDUAL_NMPC_THREADS (>= 1), defaulting to the hardware
// concurrency.
int worker_thread_cap();

// Runs fn(0..n-1) on up to worker_thread_cap() threads. Exceptions from the
// workers are rethrown on the calling thread.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace resnmpc
