#ifndef SMSR_PARALLEL_HPP
#define SMSR_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace smsr {

/* Worker count: SMSR_THREADS if set and positive, else hardware concurrency */
unsigned thread_count();

/*
 * Runs body(i) for i in [0, n). Each index must write only to its own
 * output slot so results do not depend on the thread count.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace smsr

#endif // SMSR_PARALLEL_HPP
