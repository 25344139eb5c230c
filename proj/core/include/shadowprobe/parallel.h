#ifndef SHADOWPROBE_PARALLEL_H_
#define SHADOWPROBE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace shadowprobe {

// Calls fn(i) for every i in [0, n) on up to `jobs` threads (jobs <= 1 runs
// inline). Results must be written to per-index slots so the outcome does not
// depend on scheduling. The exception of the lowest failing index is
// rethrown after all workers stop.
void ParallelFor(std::size_t n, std::size_t jobs,
                 const std::function<void(std::size_t)>& fn);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_PARALLEL_H_
