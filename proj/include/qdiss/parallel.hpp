#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qdiss {

// Deterministic work distribution for ensemble averaging.
//
// Items are grouped into fixed blocks by index. Workers pull whole blocks from
// a shared counter, so which thread runs a block depends on timing, but the
// content of a block never does. Callers accumulate per-block partial results
// and reduce them serially in block order afterwards; that reduction order is
// what makes the final sums independent of the worker count.

struct BlockRange {
    std::size_t block;  // block index
    std::size_t lo;     // first item
    std::size_t hi;     // one past last item
};

inline std::size_t block_count(std::size_t n_items, std::size_t block_size) {
    return (n_items + block_size - 1) / block_size;
}

inline void run_blocks(std::size_t n_items, std::size_t block_size, int workers,
                       const std::function<void(const BlockRange&)>& body) {
    if (n_items == 0) return;
    const std::size_t nb = block_count(n_items, block_size);
    auto range = [&](std::size_t b) {
        return BlockRange{b, b * block_size, std::min(n_items, (b + 1) * block_size)};
    };
    if (workers <= 1) {
        for (std::size_t b = 0; b < nb; ++b) body(range(b));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto work = [&] {
        try {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= nb || failed.load()) return;
                body(range(b));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            failed.store(true);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<std::size_t>(workers, nb);
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Worker count resolution: explicit request wins, then the QDISS_WORKERS
// environment variable, then single threaded.
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QDISS_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

}  // namespace qdiss
