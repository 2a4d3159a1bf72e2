#pragma once

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace hln {

// Splits [0, count) into contiguous chunks and runs fn(begin, end) on each.
// threads == 0 uses hardware_concurrency. Chunks are disjoint, so workers may
// write to disjoint slices of shared output without synchronization.
template <typename Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
    if (threads == 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads < 1) threads = 1;
    }
    if (threads > count) threads = static_cast<int>(count);
    if (threads <= 1) {
        fn(std::int64_t{0}, count);
        return;
    }

    std::vector<std::thread> workers;
    workers.reserve(threads);
    std::vector<std::exception_ptr> errors(threads);
    std::int64_t chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        std::int64_t begin = t * chunk;
        std::int64_t end = begin + chunk < count ? begin + chunk : count;
        if (begin >= end) break;
        workers.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace hln
