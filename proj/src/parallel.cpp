#include "hopfgeom/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hopf {

unsigned thread_count() {
    if (const char* env = std::getenv("HOPFGEOM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    // Dynamic chunks; every index below the lowest failure is still visited,
    // so the reported error does not depend on the schedule.
    const std::size_t chunk = std::max<std::size_t>(1, n / (workers * 16));
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> first_error_index{n};
    std::exception_ptr first_error;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= n || begin > first_error_index.load()) return;
                const std::size_t end = std::min(n, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (i < first_error_index.load()) {
                            first_error_index.store(i);
                            first_error = std::current_exception();
                        }
                        break;
                    }
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hopf
