#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace anisolab {

/// Index-parallel loop; results must be written to per-index slots so the
/// outcome does not depend on scheduling.  The first exception is rethrown
/// after all workers join.
inline void parallel_for_indexed(std::size_t n, const std::function<void(std::size_t)>& fn,
                                 unsigned thread_count = 0) {
    if (n == 0) return;
    unsigned hw = thread_count ? thread_count : std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (hw > n) hw = static_cast<unsigned>(n);
    if (hw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mtx;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex idx_mtx;
    for (unsigned w = 0; w < hw; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lk(idx_mtx);
                    if (next >= n) return;
                    i = next++;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(mtx);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace anisolab
