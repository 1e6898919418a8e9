#ifndef MFMUSIC_PARALLEL_HPP
#define MFMUSIC_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mfmusic {

// Worker cap: MFMUSIC_THREADS env var, where 0 or unset means "auto"
// (hardware concurrency). Values are re-read on every call so tests can
// toggle the variable without re-initializing anything.
inline unsigned worker_count() {
    if (const char* env = std::getenv("MFMUSIC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs f(begin, end) over a partition of [0, n) into contiguous chunks, one
// per worker. Results must be written to disjoint, pre-allocated slots so
// the output is identical for any worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n ? n : 1);
    if (workers <= 1 || n < 2) {
        f(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = std::min(n, static_cast<std::size_t>(w) * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&f, b, e] { f(b, e); });
    }
    for (auto& t : pool) t.join();
}

} // namespace mfmusic

#endif
