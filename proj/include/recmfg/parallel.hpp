// Deterministic task partitioning. Work is split into fixed-size chunks
// whose boundaries do not depend on the worker count; per-chunk results are
// combined in chunk order, so any --threads value produces identical output.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace recmfg {

inline int& thread_cap_storage() {
    static int cap = 0; // 0 = unset
    return cap;
}

inline void set_thread_cap(int n) { thread_cap_storage() = n; }

inline int thread_cap() {
    if (thread_cap_storage() > 0) return thread_cap_storage();
    if (const char* env = std::getenv("REC_MFG_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(chunk_index, begin, end) over [0, n) in chunks of chunk_size.
// Chunks are claimed from a shared counter; fn must only write state owned
// by its chunk index.
inline void parallel_chunks(std::size_t n, std::size_t chunk_size,
                            const std::function<void(std::size_t, std::size_t,
                                                     std::size_t)>& fn) {
    if (n == 0) return;
    chunk_size = std::max<std::size_t>(1, chunk_size);
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(thread_cap()), n_chunks);

    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

// Map-reduce over chunks: per-chunk accumulators are reduced in chunk order.
template <typename Acc>
Acc parallel_reduce(std::size_t n, std::size_t chunk_size, Acc init,
                    const std::function<void(Acc&, std::size_t, std::size_t)>& map,
                    const std::function<void(Acc&, const Acc&)>& combine) {
    if (n == 0) return init;
    chunk_size = std::max<std::size_t>(1, chunk_size);
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<Acc> partial(n_chunks, init);
    parallel_chunks(n, chunk_size, [&](std::size_t c, std::size_t b, std::size_t e) {
        map(partial[c], b, e);
    });
    Acc total = init;
    for (const Acc& p : partial) combine(total, p);
    return total;
}

} // namespace recmfg
