#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace isoprnu {

/// Process-wide default worker count used by the data-parallel loops; 1 means serial.
unsigned default_threads() noexcept;
void set_default_threads(unsigned n) noexcept;

/// Calls fn(i) for i in [0, n). Work is split into contiguous chunks; each index is
/// visited exactly once, so callers that write only to slot i get order-independent output.
template <class F>
void parallel_for(std::size_t n, F&& fn, unsigned threads = default_threads()) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace isoprnu
