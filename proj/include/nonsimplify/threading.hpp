#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace nonsimplify {

/// Number of workers to use: explicit request, else NONSIMPLIFY_THREADS,
/// else hardware concurrency.
std::size_t resolve_threads(long requested);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
/// Tasks must write to disjoint state; the schedule never affects results.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    if (count == 0) return;
    if (threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    threads = std::min(threads, count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace nonsimplify
