#pragma once
// Deterministic block-parallel map-reduce. Work is split into fixed blocks,
// each block gets its own RNG substream, block results are merged in block
// order, so serial and OpenMP runs produce identical output bit for bit.
// threads == 1 forces the serial reference path.

#include <vector>
#include <cstdint>

#if defined(EXPILE_HAVE_OPENMP)
#include <omp.h>
#endif

namespace expile {

inline int hardware_threads() {
#if defined(EXPILE_HAVE_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// fn(block_index) -> Acc; merge(Acc&, const Acc&) folds in block order
template <typename Acc, typename Fn, typename Merge>
Acc block_reduce(long long blocks, int threads, Fn fn, Merge merge) {
    std::vector<Acc> results((size_t)blocks);
    if (threads != 1) {
#if defined(EXPILE_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : omp_get_max_threads())
        for (long long b = 0; b < blocks; ++b) results[(size_t)b] = fn(b);
#else
        for (long long b = 0; b < blocks; ++b) results[(size_t)b] = fn(b);
#endif
    } else {
        for (long long b = 0; b < blocks; ++b) results[(size_t)b] = fn(b);
    }
    Acc total{};
    for (long long b = 0; b < blocks; ++b) merge(total, results[(size_t)b]);
    return total;
}

} // namespace expile
