#ifndef ALOHADYN_PARALLEL_HPP
#define ALOHADYN_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace alohadyn {

/**
 * Runs body(i) for i in [0, n). Workers pull indices from a shared atomic
 * counter; the body must write only to per-index slots so that results are
 * identical for any job count. The first exception thrown by a body aborts
 * the pool and is rethrown on the calling thread.
 */
inline void parallel_for(std::uint32_t n, std::uint32_t jobs,
                         const std::function<void(std::uint32_t)>& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::uint32_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::uint32_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::uint32_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n || failed.load(std::memory_order_relaxed)) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const std::uint32_t workers = std::min(jobs, n);
    pool.reserve(workers);
    for (std::uint32_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
}

} // namespace alohadyn

#endif
