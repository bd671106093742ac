#pragma once

#include <cstddef>
#include <functional>

namespace flowood {

// Worker cap: FLOWOOD_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

// Runs task(i) for i in [0, n). Tasks must write disjoint outputs; the
// partition into tasks is fixed by the caller so results do not depend on the
// number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace flowood
