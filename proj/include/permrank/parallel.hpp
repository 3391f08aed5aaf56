#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace permrank {

inline unsigned effective_threads(unsigned requested) {
    const unsigned hw = std::thread::hardware_concurrency();
    unsigned n = requested != 0 ? requested : (hw != 0 ? hw : 1);
    return n == 0 ? 1 : n;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Units are handed
// out by atomic counter; callers make determinism hold by writing unit i's
// result only to slot i of a pre-sized output. The first exception thrown by
// any unit is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(effective_threads(threads), count == 0 ? 1 : count));
    if (count == 0) return;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (failure || next >= count) return;
                i = next++;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace permrank
