#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mahler {

namespace detail {
inline std::atomic<int>& thread_override()
{
    static std::atomic<int> n{0};
    return n;
}
inline thread_local bool in_parallel_region = false;
} // namespace detail

// 0 restores the default (MAHLER_LAB_THREADS, else hardware concurrency).
inline void set_thread_count(int n) { detail::thread_override() = std::max(0, n); }

inline int thread_count()
{
    if (int n = detail::thread_override(); n > 0)
        return n;
    if (const char* env = std::getenv("MAHLER_LAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n). Each index is handled exactly once, so callers
// that write into per-index slots get results independent of the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f)
{
    const int nt = static_cast<int>(std::min<std::size_t>(thread_count(), n / 16));
    if (nt <= 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::exception_ptr err;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        const std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
        pool.emplace_back([&, lo, hi] {
            detail::in_parallel_region = true;
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    f(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!err)
                    err = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

// Neumaier summation in index order.
template <class Range>
double stable_sum(const Range& r)
{
    double s = 0.0, c = 0.0;
    for (double x : r) {
        double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}

} // namespace mahler
