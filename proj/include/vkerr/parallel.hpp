#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace vkerr {

// Runs f(i) for i in [0, n) on a small thread pool. Each index owns its
// output slot, so results do not depend on scheduling. The lowest-index
// exception is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f, unsigned threads = 0) {
    if (n == 0) return;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::exception_ptr> errors(n);
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace vkerr
