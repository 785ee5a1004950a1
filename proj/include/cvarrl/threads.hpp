#pragma once

#include <functional>

namespace cvarrl {

/** Worker count: CVARRL_THREADS if set and positive, else hardware concurrency. */
int thread_count();

/**
 * Runs fn(0), ..., fn(n - 1) across thread_count() workers. Job order within
 * a worker is unspecified, so fn must not depend on shared mutable state
 * beyond its own slot; determinism comes from per-job seeding.
 */
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace cvarrl
