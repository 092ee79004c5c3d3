#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qlattice {

// Default worker count: QLATTICE_WORKERS if set, else hardware concurrency.
inline int default_workers() {
    if (const char* env = std::getenv("QLATTICE_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs job(i) for i in [0, njobs) on up to `workers` threads. Jobs write to
// their own output slots, so the caller reduces in index order and results do
// not depend on scheduling.
template <class Job>
void parallel_for(std::size_t njobs, int workers, Job&& job) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(njobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < njobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= njobs) return;
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (!err) err = std::current_exception();
                    next = njobs;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace qlattice
