#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nab::parallel {

/// Runs body(block_index, begin, end) over [0, count) split into fixed-size
/// blocks. The partition depends only on count, never on the thread count, so
/// callers that accumulate one partial result per block and combine the
/// partials in block order get bit-identical results at any parallelism level.
template <typename Body>
void for_each_block(std::size_t count, std::size_t block_size, Body&& body) {
    if (count == 0) return;
    if (block_size == 0) block_size = 1;
    const std::size_t blocks = (count + block_size - 1) / block_size;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (long long b = 0; b < static_cast<long long>(blocks); ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * block_size;
        const std::size_t end = begin + block_size < count ? begin + block_size : count;
        body(static_cast<std::size_t>(b), begin, end);
    }
}

inline std::size_t block_count(std::size_t count, std::size_t block_size) {
    if (count == 0) return 0;
    if (block_size == 0) block_size = 1;
    return (count + block_size - 1) / block_size;
}

inline void set_worker_cap(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

/// Row block granularity used by the encoder and network loops.
inline constexpr std::size_t kRowBlock = 64;

}  // namespace nab::parallel
