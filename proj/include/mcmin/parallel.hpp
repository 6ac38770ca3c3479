#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mcmin {

/// Static-partition parallel loop. Results must be written to disjoint,
/// index-addressed slots so the outcome is independent of scheduling.
/// The first exception thrown by any worker is rethrown on the caller.
inline void parallel_for(int n, bool enabled, const std::function<void(int)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (!enabled || hw <= 1 || n < 32) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    int workers = static_cast<int>(std::min<unsigned>(hw, 8));
    std::exception_ptr err = nullptr;
    std::mutex err_mu;
    std::atomic<bool> stop{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n && !stop.load(std::memory_order_relaxed); i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                stop.store(true, std::memory_order_relaxed);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace mcmin
