#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "affvec/core.hpp"

namespace affvec {

/// Worker count from AFFVEC_WORKERS, else 1.
inline std::size_t default_workers() {
    if (const char* env = std::getenv("AFFVEC_WORKERS")) {
        if (auto n = parse_int<std::size_t>(env); n && *n > 0) return *n;
    }
    return 1;
}

/// Splits [0, n) into contiguous blocks and calls fn(begin, end, worker) on
/// each from its own thread. The first exception thrown by any worker is
/// rethrown after all threads join.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    workers = std::min(workers, n);
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex mu;
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t t = 0; t < workers; ++t) {
        std::size_t b = t * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        threads.emplace_back([&, b, e, t] {
            try {
                fn(b, e, t);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace affvec
