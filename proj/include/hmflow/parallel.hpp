#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hmflow {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on contiguous blocks. Bodies must write disjoint outputs.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    const std::size_t lo = w * chunk;
                    const std::size_t hi = std::min(n, lo + chunk);
                    for (std::size_t i = lo; i < hi; ++i) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace hmflow
