#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tlab {

// Runs f(i) for i in [0, n) on up to `workers` threads. Work is handed out by
// index, so anything written to slot i is independent of the schedule; callers
// reduce the slots in index order afterwards.
template <class F>
void parallel_for(long n, int workers, F&& f) {
    if (n <= 0) return;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<long>(n, 256))));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto body = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace tlab
