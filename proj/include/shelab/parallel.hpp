#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace shelab {

// Resolve a worker-count request: 0 means "auto" (hardware concurrency,
// at least 1).
inline std::size_t resolve_workers(std::size_t requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

// Run body(i) for i in [0, count) on `workers` threads.  Indices are
// handed out via an atomic-style counter under a mutex; results must be
// written by the body into per-index slots so the outcome is identical
// regardless of the worker count or scheduling order.  The first
// exception thrown by any body is rethrown on the calling thread.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& body) {
    workers = resolve_workers(workers);
    if (count == 0) return;
    if (workers <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    if (workers > count) workers = count;

    std::mutex mtx;
    std::size_t next = 0;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (first_error || next >= count) return;
                i = next++;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mtx);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace shelab
