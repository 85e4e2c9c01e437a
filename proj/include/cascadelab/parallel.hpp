#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace cascadelab {

// --threads resolution: explicit value wins, else CASCADELAB_THREADS, else 1.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CASCADELAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// Static block partition of [0, n); f(lo, hi) handles [lo, hi) and must write
// only to slots in that range, so the result is independent of the worker
// count. Workers get one contiguous block each.
template <class F>
void parallel_for_blocks(int64_t n, int threads, F&& f) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        f(0, n);
        return;
    }
    std::vector<std::thread> pool;
    int64_t chunk = (n + threads - 1) / threads;
    // worker throws are re-raised on the caller; lowest block wins so the
    // surfaced error does not depend on scheduling
    auto errors = std::vector<std::exception_ptr>(size_t(threads));
    for (int t = 0; t < threads; ++t) {
        int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f, err = &errors[size_t(t)]] {
            try {
                f(lo, hi);
            } catch (...) {
                *err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Per-index convenience wrapper over parallel_for_blocks.
template <class F>
void parallel_for(int64_t n, int threads, F&& f) {
    parallel_for_blocks(n, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) f(i);
    });
}

}  // namespace cascadelab
