#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace emea {

// Worker cap: EMEA_THREADS env var, 0 or unset means hardware concurrency.
inline unsigned thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("EMEA_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return hw;
}

// Runs fn(i) for i in [0, n). Each index writes only its own outputs, so the
// result is identical to the sequential loop regardless of thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = thread_count();
    if (workers <= 1 || n < 2 * workers) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace emea
