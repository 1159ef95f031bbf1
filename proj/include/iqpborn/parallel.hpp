// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace iqpborn {

/// Worker count from IQPBORN_THREADS, else 1.
[[nodiscard]] inline unsigned threads_from_env() {
    if (const char* s = std::getenv("IQPBORN_THREADS"); s != nullptr && *s != '\0') {
        try {
            const long v = std::stol(s);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

/**
 * Runs task(i) for i in [0, count) on up to `threads` workers. Tasks must
 * write only to their own slot; callers reduce the slots in index order, so
 * results never depend on the worker count.
 */
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& task) {
    const auto workers = static_cast<std::size_t>(std::max(1U, threads));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    pool.reserve(std::min(workers, count));
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Pairwise sum of equal-length partial vectors in a fixed tree order.
[[nodiscard]] inline std::vector<double> pairwise_reduce(std::vector<std::vector<double>> parts) {
    if (parts.empty()) return {};
    for (std::size_t stride = 1; stride < parts.size(); stride <<= 1) {
        for (std::size_t i = 0; i + stride < parts.size(); i += stride << 1) {
            auto& dst = parts[i];
            const auto& src = parts[i + stride];
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }
    return std::move(parts.front());
}

}  // namespace iqpborn
