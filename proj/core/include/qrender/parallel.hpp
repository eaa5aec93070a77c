/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qrender {

/// Resolves a requested worker count; 0 means "use every hardware thread".
inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries depend
/// only on n and the worker count, and bodies must write to disjoint outputs.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    workers = resolve_workers(workers);
    if (n == 0) return;
    if (workers == 1 || n == 1) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(n, workers * 4);
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::size_t next = 0;
    std::mutex next_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t chunk;
            {
                std::lock_guard lock(next_mutex);
                if (next >= chunks) return;
                chunk = next++;
            }
            const std::size_t begin = n * chunk / chunks;
            const std::size_t end = n * (chunk + 1) / chunks;
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned spawned = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    pool.reserve(spawned);
    for (unsigned i = 0; i < spawned; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace qrender
