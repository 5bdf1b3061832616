#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mmrisk::detail {

// Number of worker threads: hardware concurrency, capped by the
// MMRISK_THREADS environment variable and by the amount of work.
inline unsigned worker_count(std::uint64_t n_items) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("MMRISK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            hw = std::min(hw, static_cast<unsigned>(v));
        }
    }
    if (n_items < hw) hw = static_cast<unsigned>(std::max<std::uint64_t>(1, n_items));
    return hw;
}

// Runs fn(i) for i in [begin, end) across threads. Every index must write
// only its own outputs; under that contract the result cannot depend on the
// thread count or on scheduling. The first exception thrown by any worker
// is rethrown after all workers finish.
template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
    if (end <= begin) return;
    const unsigned workers = worker_count(static_cast<std::uint64_t>(end - begin));
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<int> next{begin};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= end || failed.load(std::memory_order_relaxed)) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace mmrisk::detail
